"""Numerical laboratory for spherical mixed p-spin glass models."""

from pspinlab._core import (  # noqa: F401
    BandFreeEnergy,
    BandSpec,
    CapacityError,
    Chain,
    ComplexityCell,
    ConcavityReport,
    CriticalPoint,
    CriticalPointSet,
    CsResult,
    DiscreteMeasure,
    FreeEnergyCurve,
    GroundState,
    Hamiltonian,
    Histogram,
    LsqResult,
    LsqSystem,
    Mixture,
    MultisampResult,
    MultisampVerdict,
    OverlapArray,
    OverlapStats,
    PathStep,
    SpherePath,
    SpherePoint,
    TapScan,
    TapScanRow,
    __version__,
    alg_energy,
    band_free_energy,
    band_log_volume,
    cli_run,
    count_in_window,
    derive_seed,
    e_infinity,
    empirical_complexity,
    find_critical_points,
    free_energy_curve,
    ground_state,
    hessian_descent,
    is_full_rsb_candidate,
    least_squares_descent,
    mcmc_chain,
    minimize_cs,
    multisamplability_diagnostic,
    overlap_statistics,
    restricted_mixture,
    tap_correction,
    tap_scan,
    volume_exponent,
)
