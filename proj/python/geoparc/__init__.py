"""Parking on geometric Galton-Watson trees."""

from ._geoparc import (
    ArrivalLaw,
    GeoparcError,
    F_at_one,
    F_at_zero,
    __version__,
    classify,
    construct_stable_law,
    discriminant,
    enum_plane_trees,
    find_tc,
    iterate_rde,
    oracle_compare,
    phi,
    radius_of_F,
    run_criterion,
    run_experiment,
    solve_p_circ,
    tail_exponent_fit,
    threshold_curve,
    tutte_solve,
    x_hat,
)


def error_code(exc):
    """Code prefix of a GeoparcError message, e.g. "BadParam"."""
    return str(exc).split(":", 1)[0]
