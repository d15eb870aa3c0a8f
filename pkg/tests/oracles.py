"""Independent oracles used by the test suite.

Each oracle computes an expected value by a route that shares no code with
the implementation it checks: brute-force symmetric-exclusion principal
values, direct resolvent-kernel quadrature, dense matrix exponentials,
Hermitian eigenproblems, and exact rational arithmetic.
"""

import warnings
from fractions import Fraction

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad

from drivendecay.selfenergy import PoleResult, SheetLabel


def pv_bruteforce(model, eta, eps_seq=(4e-3, 2e-3, 1e-3)):
    """P.V. integral of chi2/(omega-eta) by symmetric exclusion windows.

    Integrates over [0, eta-eps] U [eta+eps, inf) and removes the O(eps)
    error by two Richardson steps, leaving O(eps^3).
    """
    def windowed(eps):
        f = lambda w: float(model.chi2(w)) / (w - eta)
        w_hi = 8.0 * max(model.lambda_cut, eta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            a, _ = quad(f, 0, eta - eps, limit=300, epsabs=1e-14, epsrel=1e-13)
            pts = [model.lambda_cut] if eta + eps < model.lambda_cut < w_hi else None
            b, _ = quad(f, eta + eps, w_hi, limit=300, epsabs=1e-14, epsrel=1e-13, points=pts)
            c, _ = quad(f, w_hi, np.inf, limit=300, epsabs=1e-14, epsrel=1e-13)
        return a + b + c

    v = [windowed(e) for e in eps_seq]
    r1, r2 = 2 * v[1] - v[0], 2 * v[2] - v[1]
    return 2 * r2 - r1


def dispersion_direct(model, sigma, transform_scale=None):
    """Integral_0^inf chi2(omega)/(omega - sigma) by a mapped quadrature.

    Uses the substitution omega = S*t/(1-t) on (0, 1), a different scheme
    from the windowed subtraction inside the package.
    """
    s_c = transform_scale or max(model.lambda_cut, abs(sigma), 1.0)

    def f(t):
        om = s_c * t / (1.0 - t)
        jac = s_c / (1.0 - t) ** 2
        return float(model.chi2(om)) / (om - sigma) * jac

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        re, _ = quad(lambda t: f(t).real, 0, 1, limit=500, epsabs=1e-14, epsrel=1e-13)
        im, _ = quad(lambda t: f(t).imag, 0, 1, limit=500, epsabs=1e-14, epsrel=1e-13)
    return complex(re, im)


def resolvent_kernel_direct(params, b, s):
    """Q(B, s) from the defining kernel g^2 w0 Int chi2 (s+i w)/((s+i w)^2 + B^2) dw."""
    model = params.form_factor

    def f(w):
        z = s + 1j * w
        return float(model.chi2(w)) * z / (z * z + b * b)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        re, _ = quad(lambda w: f(w).real, 0, np.inf, limit=500, epsabs=1e-14, epsrel=1e-13)
        im, _ = quad(lambda w: f(w).imag, 0, np.inf, limit=500, epsabs=1e-14, epsrel=1e-13)
    return params.g2 * params.omega0 * complex(re, im)


def lab_frame_hamiltonian(grid, params, b):
    """Dense lab-frame Hamiltonian of the discretized model."""
    m = grid.count
    phi = np.sqrt(grid.couplings2)
    h = np.zeros((2 * m + 1, 2 * m + 1))
    h[0, 0] = params.omega0
    h[0, 1:m + 1] = phi
    h[1:m + 1, 0] = phi
    for k in range(m):
        h[1 + k, 1 + k] = grid.nodes[k]
        h[1 + m + k, 1 + m + k] = grid.nodes[k]
        h[1 + k, 1 + m + k] = b
        h[1 + m + k, 1 + k] = b
    return h

def expm_state(grid, params, b, t):
    """Exact discrete-model state at time t via the dense matrix exponential."""
    h = lab_frame_hamiltonian(grid, params, b)
    u0 = np.zeros(h.shape[0], dtype=complex)
    u0[0] = 1.0
    return sla.expm(-1j * h * t) @ u0


def dressed_arrow_eigensystem(ladder, b):
    """Branch shifts and weights from the Hermitian dressed coupling matrix.

    Basis {ground+laser photon, driven level, ladder levels}: eigenvalues
    are the branch shifts sigma_i and |<ground|v_i>|^2 are the weights.
    """
    f = np.concatenate([[1.0], ladder.f])
    d = np.concatenate([[0.0], ladder.delta])
    n = f.size
    h = np.zeros((n + 1, n + 1))
    h[0, 1:] = b * np.sqrt(f)
    h[1:, 0] = b * np.sqrt(f)
    for i in range(n):
        h[1 + i, 1 + i] = d[i]
    vals, vecs = np.linalg.eigh(h)
    order = np.argsort(vals)
    return vals[order], (vecs[0, :] ** 2)[order]


def ratio_closed_form_exact(kappa, num, den):
    """gamma(B)/gamma at rational B/omega0 = num/den via exact arithmetic."""
    x = Fraction(num, den)
    val = Fraction(1, 2) * ((1 + x) ** kappa + ((1 - x) ** kappa if x <= 1 else 0))
    return val


def prescribed_pole(params, gamma, delta_e=0.0, b=0.0):
    """PoleResult carrying a chosen width/shift (for spectrum shape tests)."""
    w0 = params.omega0
    sheet = SheetLabel.III if 0 < b < w0 else SheetLabel.II
    return PoleResult(s_pole=complex(-0.5 * gamma, -(w0 - delta_e)), gamma=gamma,
                      delta_e=delta_e, sheet=sheet, method="perturbative",
                      residual=float("nan"), b=b)
