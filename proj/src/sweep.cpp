#include "implab/sweep.hpp"

#include <atomic>
#include <cstdio>
#include <thread>

#include "implab/phase_portrait.hpp"
#include "implab/profile.hpp"
#include "implab/simulator.hpp"

namespace implab {

namespace {

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SweepRow run_case(const SweepCase& c) {
    SweepRow row;
    row.index = c.index;
    try {
        double lambda = c.lambda ? *c.lambda : shoot_lambda(c.gamma, 3, 1e-10).lambda;
        auto model = GasModel::make(c.gamma, c.delta, lambda, c.a1, c.a2);
        // the profile is rebuilt from a fresh shot so the trajectory matches
        // the resolved lambda even when lambda was supplied explicitly
        auto shot = shoot_lambda(c.gamma, 3, 1e-10);
        auto table = reconstruct(shot, GasModel::make(c.gamma, 0.0, shot.lambda));

        SimConfig cfg;
        cfg.model = model;
        cfg.frame = Frame::selfsim;
        cfg.n_cells = c.n_cells;
        cfg.r_max = c.r_max;
        cfg.viscous = true;
        cfg.time_end = c.tau_end;
        cfg.output_cadence = c.tau_end;
        cfg.cutoffs.r0 = 5.0;
        auto initial =
            state_from_profile(table, Frame::selfsim, 0.0, c.n_cells + 1, c.r_max);
        auto baseline = initial;
        auto series = run(cfg, std::move(initial), &table);
        if (series.termination != "time-end")
            throw SimError("sweep case ended early: " + series.termination);

        double drift = 0.0;
        for (std::size_t i = 0; i < series.final_state.size(); ++i)
            drift = std::max(drift, std::abs(series.final_state.field_a[i] -
                                             baseline.field_a[i]));
        row.status = "ok";
        row.model = model;
        row.drift = drift;
        row.fdis_sup = series.records.back().fdis_sup;
        row.min_q_env = series.records.back().min_q_env;
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const std::vector<SweepCase>& cases,
                                unsigned jobs) {
    if (jobs < 1) throw DomainError("run_sweep: jobs must be >= 1");
    std::vector<SweepRow> rows(cases.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= cases.size()) return;
            rows[k] = run_case(cases[k]);
        }
    };
    if (jobs == 1 || cases.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        unsigned n = std::min<std::size_t>(jobs, cases.size());
        pool.reserve(n);
        for (unsigned j = 0; j < n; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out =
        "# implab sweep v1\n"
        "index,status,gamma,delta,lambda,a1,a2,c_dis,delta_dis,"
        "drift,fdis_sup,min_q_env\n";
    for (const auto& r : rows) {
        std::string status = r.status;
        for (auto& ch : status)
            if (ch == ',' || ch == '\n') ch = ';';
        out += std::to_string(r.index) + ',' + status;
        if (r.status == "ok") {
            for (double v : {r.model.gamma, r.model.delta, r.model.lambda,
                             r.model.a1, r.model.a2, r.model.c_dis,
                             r.model.delta_dis, r.drift, r.fdis_sup,
                             r.min_q_env})
                out += ',' + num17(v);
        } else {
            for (int k = 0; k < 10; ++k) out += ",nan";
        }
        out += '\n';
    }
    return out;
}

}  // namespace implab
