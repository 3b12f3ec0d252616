import numpy as np
import pytest

from fastdrift.fields import (
    DomainSpec,
    FieldError,
    ScalarField,
    VectorField3,
    make_field,
    vf_norm,
)
from fastdrift.homological import (
    DriverField,
    LieDivergenceError,
    SingularDriverError,
    homological_residual,
    lie_bracket,
    lie_transform,
    op_F,
    op_G,
    solve_homological,
)


def domain(K=6, nI=17, ny=121, I=(0.0, 1.0), Y=(-1.0, 1.0)):
    return DomainSpec(I_interval=I, Y_interval=Y, widen_sigma=0.1,
                      grid_I=nI, grid_y=ny, K_max=K)


def const_driver(d, v=1.0, om=0.0):
    return DriverField.from_callables(d, lambda I, y: v + 0 * y, lambda I, y: om + 0 * y)


# -- transport operators ---------------------------------------------------------


def test_op_F_plain_primitive():
    d = domain()
    drv = const_driver(d, v=1.0, om=0.0)
    g = make_field(d, lambda I, y, psi: 1.0 + 0 * psi)
    out = op_F(drv, g)
    K = d.K_max
    expect = d.y_nodes - drv.y0
    assert np.allclose(out.coeffs[K].real, expect[None, :], atol=1e-12)


def test_op_F_phase_free_mode():
    d = domain()
    drv = const_driver(d, v=1.0, om=0.0)
    g = make_field(d, lambda I, y, psi: np.cos(psi) + 0 * y)
    out = op_F(drv, g)
    ref = make_field(d, lambda I, y, psi: (y - drv.y0) * np.cos(psi))
    assert np.max(np.abs(out.coeffs - ref.coeffs)) < 1e-12


def test_op_F_oscillatory_residual():
    # v=2, omega=1: check the first equation of the mode ODE on interior nodes,
    # differentiating with a 5-point stencil so the FD error sits below the bar
    d = domain(ny=241)
    drv = const_driver(d, v=2.0, om=1.0)
    g = make_field(d, lambda I, y, psi: np.cos(psi) + 0 * y)
    Y = op_F(drv, g)
    K = d.K_max
    h = (d.Y_interval[1] - d.Y_interval[0]) / (d.grid_y - 1)
    for k in (1, -1):
        yk = Y.coeffs[k + K][0]
        dyk = (yk[:-4] - 8 * yk[1:-3] + 8 * yk[3:-1] - yk[4:]) / (12 * h)
        res = 2.0 * dyk + 1j * k * 1.0 * yk[2:-2] - g.coeffs[k + K][0, 2:-2]
        assert np.max(np.abs(res)) < 1e-8


def test_op_G_reduces_to_op_F_for_constant_v():
    d = domain()
    drv = const_driver(d, v=1.0, om=0.4)
    g = make_field(d, lambda I, y, psi: np.sin(psi) * (1 + 0.3 * y))
    a = op_F(drv, g)
    b = op_G(drv, g)
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-11


def test_op_G_closed_form_exponential_speed():
    d = domain(K=2, nI=9, ny=201)
    drv = DriverField.from_callables(d, lambda I, y: np.exp(y), lambda I, y: 0.0 * y)
    g = make_field(d, lambda I, y, psi: 1.0 + 0 * psi)
    out = op_G(drv, g)
    y0 = drv.y0
    y = d.y_nodes
    expect = np.exp(y) / 2.0 * (np.exp(-2 * y0) - np.exp(-2 * y))
    K = d.K_max
    assert np.max(np.abs(out.coeffs[K].real - expect[None, :])) < 1e-9


def test_transport_preserves_zero_average():
    d = domain()
    drv = DriverField.from_callables(d, lambda I, y: 1.5 + 0.2 * np.tanh(y),
                                     lambda I, y: 0.1 * np.exp(-y))
    g = make_field(d, lambda I, y, psi: np.cos(2 * psi) * (1 + y) + np.sin(psi) * I)
    K = d.K_max
    for op in (op_F, op_G):
        out = op(drv, g)
        assert np.max(np.abs(out.coeffs[K])) < 1e-12


def test_singular_driver_refused():
    d = domain()
    with pytest.raises(SingularDriverError):
        DriverField.from_callables(d, lambda I, y: y, lambda I, y: 0.0 * y)


def test_operator_norm_bounds():
    # measured sup bounds on the real slice
    d = domain(ny=121)
    rng = np.random.default_rng(2)
    drv = DriverField.from_callables(d, lambda I, y: 1.5 + 0.2 * np.tanh(y) + 0.1 * I,
                                     lambda I, y: 0.3 * np.exp(-y))
    diam = d.Y_interval[1] - d.Y_interval[0]
    s2 = diam * float(np.max(np.abs(drv.dv_dy / drv.v_grid)))
    psi = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    for _ in range(5):
        a = rng.uniform(-1, 1, 4)
        g = make_field(d, lambda I, y, psi_: (a[0] + a[1] * I) * np.cos(psi_)
                       + a[2] * np.sin(2 * psi_) + a[3] * np.cos(y) * np.cos(3 * psi_))
        bound = diam * float(np.max(np.abs(g.values_on_grid(psi))) / np.min(np.abs(drv.v_grid)))
        got_F = float(np.max(np.abs(op_F(drv, g).values_on_grid(psi))))
        got_G = float(np.max(np.abs(op_G(drv, g).values_on_grid(psi))))
        assert got_F <= bound * (1 + 1e-9)
        assert got_G <= np.exp(s2) * bound * (1 + 1e-9)


# -- homological solver ------------------------------------------------------------


def toy_driver(d):
    return DriverField.from_callables(d, lambda I, y: 1.5 + 0.2 * np.tanh(y),
                                      lambda I, y: 0.1 * np.exp(-y))


def test_solve_structure_when_Z_equals_driver():
    d = domain()
    drv = toy_driver(d)
    Z = drv.as_vector3()
    Y, res = solve_homological(drv, Z)
    assert np.max(np.abs(Y.X1.coeffs)) < 1e-14
    ref2 = op_G(drv, drv.v)
    assert np.max(np.abs(Y.X2.coeffs - ref2.coeffs)) < 1e-11
    assert res < 1e-6


def test_solve_single_component():
    d = domain()
    drv = const_driver(d, v=1.0, om=0.0)
    Z = VectorField3(make_field(d, lambda I, y, psi: np.cos(psi) + 0 * y),
                     ScalarField.zeros(d), ScalarField.zeros(d))
    Y, res = solve_homological(drv, Z)
    ref = make_field(d, lambda I, y, psi: (y - drv.y0) * np.cos(psi))
    assert np.max(np.abs(Y.X1.coeffs - ref.coeffs)) < 1e-11
    assert np.max(np.abs(Y.X2.coeffs)) < 1e-13
    assert np.max(np.abs(Y.X3.coeffs)) < 1e-13
    assert res < 1e-8


def random_toy_instance(rng, d):
    cv = rng.uniform(0.5, 2.0)
    av = rng.uniform(-0.3, 0.3, 2)
    om0 = rng.uniform(-0.5, 0.5)
    drv = DriverField.from_callables(
        d,
        lambda I, y: cv + av[0] * np.cos(y) * 0.3 + av[1] * I * 0.2,
        lambda I, y: om0 * np.exp(-0.5 * y) + 0.1 * I,
    )
    amps = rng.uniform(-1, 1, (3, 3, 2))

    def comp(i):
        def f(I, y, psi):
            acc = 0.0
            for k in range(1, 4):
                prof = 1 + 0.2 * np.sin(y + amps[i, k - 1, 0]) + 0.1 * I
                acc = acc + amps[i, k - 1, 1] * prof * np.cos(k * psi + amps[i, k - 1, 0])
            return acc / 3.0
        return f

    Z = VectorField3(*(make_field(d, comp(i)) for i in range(3)))
    return drv, Z


def test_homological_residual_random_instances():
    d = domain(K=6, nI=17, ny=241)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        drv, Z = random_toy_instance(rng, d)
        Y, res = solve_homological(drv, Z)
        worst = max(worst, res)
    assert worst < 1e-6, f"worst relative residual {worst:.2e}"


# -- Lie bracket ---------------------------------------------------------------------


def random_poly_field3(d, rng):
    def comp():
        a = rng.uniform(-0.5, 0.5, 6)

        def f(I, y, psi):
            return (a[0] + a[1] * I + a[2] * y) * (1 + a[3] * np.cos(psi) + a[4] * np.sin(psi)) + a[5]
        return f
    return VectorField3(*(make_field(d, comp()) for _ in range(3)))


def test_bracket_antisymmetry_and_bilinearity():
    d = domain(K=8, nI=17, ny=33)
    rng = np.random.default_rng(5)
    X = random_poly_field3(d, rng)
    Y = random_poly_field3(d, rng)
    self_bracket = lie_bracket(X, X)
    assert all(np.max(np.abs(c.coeffs)) < 1e-12 for c in self_bracket.components)
    lhs = lie_bracket(X, Y)
    rhs = lie_bracket(Y, X)
    assert all(np.max(np.abs(a.coeffs + b.coeffs)) < 1e-12
               for a, b in zip(lhs.components, rhs.components))


def test_bracket_constant_fields_commute():
    d = domain(K=4, nI=9, ny=17)
    c = VectorField3(*(make_field(d, lambda I, y, psi: v + 0 * psi) for v in (1.0, -2.0, 0.5)))
    e = VectorField3(*(make_field(d, lambda I, y, psi: v + 0 * psi) for v in (0.3, 0.7, -1.1)))
    out = lie_bracket(c, e)
    assert all(np.max(np.abs(comp.coeffs)) < 1e-13 for comp in out.components)


def test_bracket_hand_jacobian():
    d = domain(K=4, nI=9, ny=33)
    Y = VectorField3(ScalarField.zeros(d),
                     make_field(d, lambda I, y, psi: 1.0 + 0 * psi),
                     ScalarField.zeros(d))
    X = VectorField3(ScalarField.zeros(d), ScalarField.zeros(d),
                     make_field(d, lambda I, y, psi: y + 0 * psi))
    out = lie_bracket(Y, X)
    ref = make_field(d, lambda I, y, psi: 1.0 + 0 * psi)
    assert np.max(np.abs(out.X3.coeffs - ref.coeffs)) < 1e-12
    assert np.max(np.abs(out.X1.coeffs)) < 1e-13
    assert np.max(np.abs(out.X2.coeffs)) < 1e-13


def test_bracket_jacobi_identity():
    # degree <= 1 profiles make the grid differences exact, so Jacobi is sharp
    d = domain(K=8, nI=13, ny=25)
    rng = np.random.default_rng(11)
    for _ in range(3):
        X = random_poly_field3(d, rng)
        Y = random_poly_field3(d, rng)
        Z = random_poly_field3(d, rng)
        J = (lie_bracket(X, lie_bracket(Y, Z))
             + lie_bracket(Y, lie_bracket(Z, X))
             + lie_bracket(Z, lie_bracket(X, Y)))
        scale = max(np.max(np.abs(c.coeffs)) for f in (X, Y, Z) for c in f.components)
        assert all(np.max(np.abs(c.coeffs)) < 1e-8 * max(1.0, scale) for c in J.components)


# -- Lie series ----------------------------------------------------------------------


def test_lie_transform_identity_for_zero_generator():
    d = domain(K=4, nI=9, ny=17)
    rng = np.random.default_rng(3)
    X = random_poly_field3(d, rng)
    out = lie_transform(VectorField3.zeros(d), X)
    assert all(np.max(np.abs(a.coeffs - b.coeffs)) < 1e-14
               for a, b in zip(out.components, X.components))


def test_lie_transform_commuting_constants():
    d = domain(K=4, nI=9, ny=17)
    Y = VectorField3(*(make_field(d, lambda I, y, psi: v + 0 * psi) for v in (0.05, 0.02, 0.01)))
    X = VectorField3(*(make_field(d, lambda I, y, psi: v + 0 * psi) for v in (1.0, 2.0, 3.0)))
    out = lie_transform(Y, X, tol=1e-14)
    assert all(np.max(np.abs(a.coeffs - b.coeffs)) < 1e-13
               for a, b in zip(out.components, X.components))


def test_lie_transform_refuses_large_generator():
    d = domain(K=4, nI=9, ny=17)
    Y = VectorField3(*(make_field(d, lambda I, y, psi: 1.0 + 0 * psi) for _ in range(3)))
    X = random_poly_field3(d, np.random.default_rng(1))
    with pytest.raises(LieDivergenceError):
        lie_transform(Y, X)


def test_iterated_bracket_growth_bound():
    # measured version of the factorial growth estimate for repeated brackets
    d = domain(K=8, nI=13, ny=25)
    rng = np.random.default_rng(17)
    u_minus = (1.0, 1.0, 0.2)
    u_plus = (1.0, 1.0, 0.4)
    w = (1.0, 1.0, 1.0)
    Y = random_poly_field3(d, rng).scaled(0.05)
    W = random_poly_field3(d, rng)
    nY = vf_norm(Y, u_plus, w)
    nW = vf_norm(W, u_minus, w)
    term = W
    fact = 1.0
    for k in range(1, 6):
        term = lie_bracket(Y, term)
        fact *= k
        lhs = vf_norm(term, u_minus, w)
        assert lhs <= 3.0 ** k * fact * nY ** k * nW * (1 + 1e-9)
