import dataclasses

import numpy as np
import pytest

from oracles import circulant_matrix
from pidal import poisson, solver, spectral, tv
from solver_cases import constructed_fixed_point, disc_phantom, state_distance, synthetic_problem


def test_config_mu_rule_and_validation():
    cfg = solver.SolverConfig.with_mu_rule(6e-4)
    assert cfg.mu == pytest.approx(6e-4 / 50)
    assert (cfg.max_iters, cfg.rel_change_tol, cfg.final_estimate) == (500, 1e-5, "u")
    assert cfg.tv_settings == tv.TvDenoiseSettings(30, 0.25, 1e-4)
    with pytest.raises(ValueError):
        solver.SolverConfig(1.0)
    with pytest.raises(ValueError):
        solver.SolverConfig(1.0, mu=0.1, mu_rule=True)
    with pytest.raises(ValueError):
        solver.SolverConfig(-1.0, mu=0.1)


def test_delta_kernel_fixed_point_is_unchanged():
    y = np.array([[3.0, 7.0, 1.0], [2.0, 9.0, 4.0]])
    tf = spectral.plan(spectral.BlurKernel.delta(), *y.shape)
    problem = solver.Problem(tf, y, solver.SolverConfig(0.0, mu=1.0))
    state = solver.SolverState(y.copy(), y.copy(), y.copy(), np.zeros_like(y), np.zeros_like(y))
    new = solver.pidal_step(state, problem)
    assert state_distance(new, state) <= 1e-10
    assert new.iteration == 1 and len(new.history) == 1


def test_z_is_nonnegative_after_every_step():
    problem = synthetic_problem(tau=0.5, seed=3)
    # low counts with many zeros
    problem = dataclasses.replace(problem, counts=np.floor(problem.counts / 40))
    state = solver.initial_state(problem.tf, problem.counts)
    for _ in range(50):
        state = solver.pidal_step(state, problem)
        assert (state.z >= 0).all()


def test_primal_residuals_decay_on_16x16_problem():
    problem = synthetic_problem(16, max_iters=200, rel_change_tol=0.0)
    _, report = solver.run(problem)
    assert report.iterations == 200
    x_norm = np.linalg.norm(report.state.x)
    last = report.history[-1]
    assert last.primal_residual_1 < 1e-3 * x_norm
    assert last.primal_residual_2 < 1e-3 * x_norm


def test_matches_direct_convex_solve_on_tiny_instance():
    cp = pytest.importorskip("cvxpy")
    n, tau = 8, 0.2
    yy, xx = np.mgrid[:n, :n]
    truth = 10 + 30.0 * ((xx > 2) & (xx < 6) & (yy > 1) & (yy < 6))
    kernel = spectral.BlurKernel.uniform(3)
    tf = spectral.plan(kernel, n, n)
    y = poisson.sample_poisson(spectral.convolve(tf, truth), 3)

    kmat = circulant_matrix(kernel.taps, (n, n))
    v = cp.Variable(n * n)
    img = cp.reshape(v, (n, n), order="C")
    gh = cp.hstack([img[:, 1:] - img[:, :-1], np.zeros((n, 1))])
    gv = cp.vstack([img[1:, :] - img[:-1, :], np.zeros((1, n))])
    tv_expr = cp.sum(cp.norm(cp.vstack([cp.vec(gh, order="C"), cp.vec(gv, order="C")]), 2, axis=0))
    kx = kmat @ v
    prob = cp.Problem(cp.Minimize(cp.sum(kx) - y.ravel() @ cp.log(kx) + tau * tv_expr))
    prob.solve(solver="CLARABEL")
    reference = v.value.reshape(n, n)

    cfg = solver.SolverConfig(tau, mu=0.02, max_iters=3000, rel_change_tol=1e-12,
                              tv_settings=tv.TvDenoiseSettings(2000, 0.25, 1e-12))
    u, _ = solver.run(solver.Problem(tf, y, cfg))
    assert np.abs(u - reference).max() <= 1e-3 * np.abs(reference).max()
    f_ref = solver.objective(reference, tf, y, tau)
    assert solver.objective(u, tf, y, tau) <= f_ref + 1e-8 * abs(f_ref)


def test_constructed_fixed_point_is_invariant():
    state, problem = constructed_fixed_point()
    assert np.hypot(state.tv_dual.p_h, state.tv_dual.p_v).max() <= 0.5 + 1e-12
    new = solver.pidal_step(state, problem)
    assert state_distance(new, state) < 1e-8


def test_run_with_zero_iterations_returns_initialisation():
    problem = synthetic_problem(max_iters=0)
    est, report = solver.run(problem)
    assert np.array_equal(est, problem.counts)
    assert report.iterations == 0 and report.history == []


def test_default_initialisation():
    problem = synthetic_problem()
    s = solver.initial_state(problem.tf, problem.counts)
    assert np.array_equal(s.x, problem.counts) and np.array_equal(s.u, problem.counts)
    assert np.abs(s.z - spectral.convolve(problem.tf, problem.counts)).max() == 0
    assert not s.d1.any() and not s.d2.any()


def test_first_step_from_default_init_keeps_x():
    problem = synthetic_problem()
    s = solver.pidal_step(solver.initial_state(problem.tf, problem.counts), problem)
    assert np.abs(s.x - problem.counts).max() <= 1e-9 * problem.counts.max()


def test_run_is_bit_reproducible():
    problem = synthetic_problem(max_iters=60)
    a, ra = solver.run(problem)
    b, rb = solver.run(problem)
    assert a.tobytes() == b.tobytes()
    assert ra.history == rb.history


def test_final_estimate_selection_and_stopping():
    problem = synthetic_problem(max_iters=400, rel_change_tol=1e-3)
    est_u, report = solver.run(problem)
    assert report.converged and report.iterations < 400
    assert report.history[-1].rel_change < 1e-3
    cfg_x = dataclasses.replace(problem.config, final_estimate="x")
    est_x, _ = solver.run(dataclasses.replace(problem, config=cfg_x))
    assert np.array_equal(est_x, report.state.x) and np.array_equal(est_u, report.state.u)


def test_objective_examples():
    y = np.array([[3.0, 7.0], [2.0, 9.0]])
    tf = spectral.plan(spectral.BlurKernel.delta(), 2, 2)
    assert solver.objective(y, tf, y, 0.0) == pytest.approx(np.sum(y - y * np.log(y)), rel=1e-14)
    c = np.full((2, 2), 4.0)
    assert solver.objective(c, tf, y, 5.0) == pytest.approx(poisson.neg_log_likelihood(y, c), rel=1e-14)


def test_objective_is_composed_from_submodules(rng):
    tf = spectral.plan(spectral.BlurKernel(rng.random((3, 3))), 6, 6)
    x = rng.uniform(1, 10, size=(6, 6))
    y = rng.poisson(5, size=(6, 6)).astype(float)
    expected = poisson.neg_log_likelihood(y, spectral.convolve(tf, x)) + 0.3 * tv.tv_norm(x)
    assert solver.objective(x, tf, y, 0.3) == pytest.approx(expected, rel=1e-13)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_iterate_names_the_step():
    problem = synthetic_problem()
    s = solver.initial_state(problem.tf, problem.counts)
    s.d2[0, 0] = np.inf
    with pytest.raises(solver.NonFiniteIterateError) as err:
        solver.pidal_step(s, problem)
    assert err.value.step == "x" and err.value.iteration == 1


def test_uniqueness_diagnostic():
    problem = synthetic_problem()
    assert solver.uniqueness_diagnostic(problem.tf, problem.counts) == {
        "all_counts_nonzero": True, "kernel_annihilates_constants": False,
    }
    zero_dc = spectral.plan(spectral.BlurKernel(np.array([[1.0, 0.0, 1.0]]), anchor=(0, 1)), 4, 4)
    diff = spectral.TransferFunction(4, 4, zero_dc.values - zero_dc.values[0, 0], zero_dc.half, zero_dc.normal_denominator)
    flags = solver.uniqueness_diagnostic(diff, np.zeros((4, 4)))
    assert flags == {"all_counts_nonzero": False, "kernel_annihilates_constants": True}


def test_problem_rejects_mismatched_counts():
    tf = spectral.plan(spectral.BlurKernel.uniform(3), 8, 8)
    with pytest.raises(ValueError):
        solver.Problem(tf, np.ones((8, 9)), solver.SolverConfig(1.0, mu=1.0))
    with pytest.raises(ValueError):
        solver.Problem(tf, np.full((8, 8), 0.5), solver.SolverConfig(1.0, mu=1.0))
