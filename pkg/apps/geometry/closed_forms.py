"""
Entry-by-entry closed forms of both nonlinear connections of the COVID field,
written from the model parameters without going through the Jacobian. Used as
an independent path against -(J - J^t)/2 and J + J^t.

The d N / d x contributions in N^1_2, N^1_6, N^2_6 (and N_11, N_16, N_22, N_26
on the cotangent side) carry the sign the derivative actually has.
"""
import numpy as np
import numpy.typing as npt

from apps.epidemic.covid import DIMENSION, ModelParams, force_of_infection
from apps.numerics.linalg import Mat, as_matrix


def lagrange_connection_closed_form(params: ModelParams, x: npt.ArrayLike) -> Mat:
    point = np.asarray(x, dtype=np.float64)
    force = force_of_infection(params, point)
    lam, share = force.lam, force.susceptible_share
    k = lam * share
    sigma, r = params.sigma, params.r

    upper = {
        (1, 2): 0.5 * lam - k,
        (1, 3): 0.5 * (params.beta_s * share - k),
        (1, 4): 0.5 * (params.beta_a * share - k),
        (1, 5): 0.5 * (params.beta_h * share - k),
        (1, 6): -0.5 * k,
        (2, 3): -0.5 * (params.beta_s * share - k - (1.0 - r) * sigma),
        (2, 4): -0.5 * (params.beta_a * share - k - r * sigma),
        (2, 5): -0.5 * (params.beta_h * share - k),
        (2, 6): 0.5 * k,
        (3, 4): 0.0,
        (3, 5): 0.5 * params.phi_s,
        (3, 6): 0.5 * params.gamma_s,
        (4, 5): 0.0,
        (4, 6): 0.5 * params.gamma_a,
        (5, 6): 0.5 * params.gamma_h,
    }
    matrix = np.zeros((DIMENSION, DIMENSION))
    for (i, j), value in upper.items():
        matrix[i - 1, j - 1] = value
        matrix[j - 1, i - 1] = -value
    return as_matrix(matrix, name='closed-form lagrange connection')


def hamilton_connection_closed_form(params: ModelParams, x: npt.ArrayLike) -> Mat:
    point = np.asarray(x, dtype=np.float64)
    force = force_of_infection(params, point)
    lam, share = force.lam, force.susceptible_share
    k = lam * share
    sigma, r = params.sigma, params.r

    upper = {
        (1, 1): 2.0 * (k - lam),
        (1, 2): lam,
        (1, 3): -params.beta_s * share + k,
        (1, 4): -params.beta_a * share + k,
        (1, 5): -params.beta_h * share + k,
        (1, 6): k,
        (2, 2): -2.0 * (k + sigma),
        (2, 3): params.beta_s * share - k + (1.0 - r) * sigma,
        (2, 4): params.beta_a * share - k + r * sigma,
        (2, 5): params.beta_h * share - k,
        (2, 6): -k,
        (3, 3): -2.0 * params.symptomatic_exit,
        (3, 4): 0.0,
        (3, 5): params.phi_s,
        (3, 6): params.gamma_s,
        (4, 4): -2.0 * params.gamma_a,
        (4, 5): 0.0,
        (4, 6): params.gamma_a,
        (5, 5): -2.0 * params.hospital_exit,
        (5, 6): params.gamma_h,
        (6, 6): 0.0,
    }
    matrix = np.zeros((DIMENSION, DIMENSION))
    for (i, j), value in upper.items():
        matrix[i - 1, j - 1] = value
        matrix[j - 1, i - 1] = value
    return as_matrix(matrix, name='closed-form hamilton connection')
