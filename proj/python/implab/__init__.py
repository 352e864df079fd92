"""Self-similar implosion laboratory: Python bindings over the C++ core."""

try:
    from ._core import (  # noqa: F401
        DomainError,
        Profile,
        ProfileError,
        ShootError,
        SimError,
        alpha_of,
        check_regime,
        delta_star,
        dissipation_constants,
        gamma_upper,
        lambda_star,
        molecule_model_threshold,
        shoot,
        steady_drift,
    )
except ImportError:  # pragma: no cover - plain CMake build layout
    from _core import (  # noqa: F401
        DomainError,
        Profile,
        ProfileError,
        ShootError,
        SimError,
        alpha_of,
        check_regime,
        delta_star,
        dissipation_constants,
        gamma_upper,
        lambda_star,
        molecule_model_threshold,
        shoot,
        steady_drift,
    )

__all__ = [
    "DomainError",
    "Profile",
    "ProfileError",
    "ShootError",
    "SimError",
    "alpha_of",
    "check_regime",
    "delta_star",
    "dissipation_constants",
    "gamma_upper",
    "lambda_star",
    "molecule_model_threshold",
    "shoot",
    "steady_drift",
]
