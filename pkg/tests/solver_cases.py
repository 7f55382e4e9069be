"""Small synthetic problems shared by the solver and acceptance tests."""
import numpy as np

from pidal import poisson, solver, spectral, tv


def disc_phantom(n):
    yy, xx = np.mgrid[:n, :n]
    x = 20.0 + 60.0 * ((xx - n / 2) ** 2 + (yy - n / 2) ** 2 < (n / 3) ** 2) + 30.0 * (xx > 3 * n // 4)
    return x


def synthetic_problem(n=16, tau=0.05, seed=7, **config):
    tf = spectral.plan(spectral.BlurKernel.uniform(3), n, n)
    y = poisson.sample_poisson(spectral.convolve(tf, disc_phantom(n)), seed)
    config.setdefault("mu_rule", "mu" not in config)
    return solver.Problem(tf, y, solver.SolverConfig(tau, **config))


def constructed_fixed_point(n=8, tau=0.5, mu=0.05, seed=0):
    """A state satisfying every optimality condition of the split problem.

    x = u = c (constant) and z = Kx = c. The z-prox condition fixes
    d1 = (y/c - 1)/mu, stationarity in x needs K^T d1 + d2 = 0, and the TV
    prox of x - d2 returns c when d2 = -(tau/mu) div p for a dual field p
    with |p| <= 1. Solving tau * div p = K^T (y/c - 1) by least squares and
    scaling tau keeps |p| <= 1/2.
    """
    r = np.random.default_rng(seed)
    kernel = spectral.BlurKernel.uniform(3)
    tf = spectral.plan(kernel, n, n)
    y = r.poisson(40.0, size=(n, n)).astype(float)
    c = y.mean()
    rhs = spectral.convolve_adjoint(tf, y / c - 1.0)

    def div_of(v):
        return tv.divergence(tv.DualField(*v.reshape(2, n, n))).ravel()

    div_mat = np.column_stack([div_of(e) for e in np.eye(2 * n * n)])
    p = np.linalg.lstsq(div_mat, rhs.ravel(), rcond=None)[0]
    tau = 2.0 * np.hypot(*p.reshape(2, n, n)).max()
    p = p / tau
    field = tv.DualField(*p.reshape(2, n, n).copy())
    d1 = (y / c - 1.0) / mu
    d2 = -(tau / mu) * tv.divergence(field)
    const = np.full((n, n), c)
    state = solver.SolverState(const.copy(), const.copy(), const.copy(), d1, d2, tv_dual=field)
    cfg = solver.SolverConfig(tau, mu=mu, tv_settings=tv.TvDenoiseSettings(5000, 0.25, 1e-14))
    return state, solver.Problem(tf, y, cfg)


def state_distance(a, b):
    return max(np.abs(getattr(a, f) - getattr(b, f)).max() for f in ("x", "z", "u", "d1", "d2"))
