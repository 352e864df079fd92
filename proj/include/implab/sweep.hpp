#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "implab/gas_model.hpp"

namespace implab {

/// One cell of a parameter sweep.  lambda is shot from gamma when absent.
struct SweepCase {
    std::size_t index = 0;
    double gamma = 1.4;
    double delta = 0.0;
    std::optional<double> lambda;
    double a1 = 1e-8;
    double a2 = 0.0;
    std::size_t n_cells = 512;
    double tau_end = 0.5;
    double r_max = 10.0;
};

struct SweepRow {
    std::size_t index = 0;
    std::string status;  ///< "ok" or the error message
    GasModel model;      ///< fully resolved parameters (valid when status=="ok")
    double drift = 0.0;      ///< sup |Q(tau_end) - Q(0)|
    double fdis_sup = 0.0;   ///< final dissipative sup norm
    double min_q_env = 0.0;  ///< final lower envelope
};

/// Runs every case (shoot, reconstruct, short self-similar viscous run) on a
/// shared-nothing worker pool and merges the rows by case index.  The output
/// is a deterministic function of the case list alone; the jobs count only
/// controls concurrency.
std::vector<SweepRow> run_sweep(const std::vector<SweepCase>& cases,
                                unsigned jobs);

/// CSV rendering with a reproducibility header; all numbers at 17 significant
/// digits.  Byte-identical for identical case lists regardless of jobs.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace implab
