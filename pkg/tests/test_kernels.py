"""Cross-backend checks: the numba kernels and the numpy fallbacks must
produce bitwise-identical results (same per-element float expressions,
exact min/compare reductions)."""
import numpy as np

from pilotwave import _kernels as K


def test_active_backend_reported():
    assert K.active_backend() in ("numba", "numpy")


def test_hopf_lax_1d_backends_bitwise_equal():
    rng = np.random.default_rng(0)
    x = np.linspace(-5, 5, 801)
    s0 = np.sin(x) + 0.3 * x ** 2
    s0[rng.integers(0, 801, 30)] = np.inf  # sprinkle min-plus holes
    for kind, k1, omega in ((0, 0.0, 0.0), (1, 0.7, 0.0), (2, 0.0, 1.1)):
        a = K.hopf_lax_1d(s0, x, 0.9, 1.3, kind, k1, omega)
        b = K.NUMPY_IMPLS["hopf_lax_1d"](s0, x, 0.9, 1.3, kind, k1, omega)
        np.testing.assert_array_equal(a, b)


def test_hopf_lax_1d_refine_backends_bitwise_equal():
    x = np.linspace(-5, 5, 801)
    s0 = np.cos(x) + 0.4 * x ** 2
    a = K.hopf_lax_1d_refine(s0, x, 0.6, 1.0, 1, 0.4, 0.0)
    b = K.NUMPY_IMPLS["hopf_lax_1d_refine"](s0, x, 0.6, 1.0, 1, 0.4, 0.0)
    np.testing.assert_array_equal(a, b)


def test_hopf_lax_2d_backends_bitwise_equal():
    rng = np.random.default_rng(1)
    n = 40
    xs = np.linspace(-2, 2, n)
    mx, my = np.meshgrid(xs, xs, indexing="ij")
    s0 = (0.2 * mx ** 2 + 0.5 * my ** 2 + 0.1 * mx * my).ravel()
    a = K.hopf_lax_2d(s0, mx.ravel(), my.ravel(), 0.5, 1.0, 1, 0.3, -0.2, 0.0)
    b = K.NUMPY_IMPLS["hopf_lax_2d"](s0, mx.ravel(), my.ravel(), 0.5, 1.0,
                                     1, 0.3, -0.2, 0.0)
    np.testing.assert_array_equal(a, b)


def test_march_backends_bitwise_equal():
    x = np.linspace(-4, 4, 301)
    s0 = 0.5 * x ** 2
    v = np.exp(-x ** 2)
    a = K.hopf_lax_march_1d(s0, x, v, 1.0, 0.4, 16)
    b = K.NUMPY_IMPLS["hopf_lax_march_1d"](s0, x, v, 1.0, 0.4, 16)
    np.testing.assert_array_equal(a, b)


def _rk4_inputs_1d():
    rng = np.random.default_rng(2)
    n = 256
    v0 = rng.normal(0, 1, n)
    v1 = v0 + 0.01 * rng.normal(0, 1, n)
    vm = 0.5 * (v0 + v1)
    r0 = np.abs(rng.normal(1, 0.1, n)) + 0.5
    r1 = r0.copy()
    rm = 0.5 * (r0 + r1)
    pos = rng.uniform(-3, 3, 500)
    flags = np.zeros(500, dtype=np.int64)
    return pos, flags, v0, vm, v1, r0, rm, r1


def test_rk4_1d_backends_bitwise_equal():
    pos, flags, v0, vm, v1, r0, rm, r1 = _rk4_inputs_1d()
    a_pos, a_flags = K.rk4_scalar_1d(pos.copy(), flags.copy(), v0, vm, v1,
                                     r0, rm, r1, -4.0, 8.0 / 256, 256,
                                     0.05, 1e-12)
    b_pos, b_flags = K.NUMPY_IMPLS["rk4_scalar_1d"](
        pos.copy(), flags.copy(), v0, vm, v1, r0, rm, r1,
        -4.0, 8.0 / 256, 256, 0.05, 1e-12)
    np.testing.assert_array_equal(a_pos, b_pos)
    np.testing.assert_array_equal(a_flags, b_flags)


def test_rk4_2d_backends_bitwise_equal():
    rng = np.random.default_rng(3)
    nx, ny = 64, 48
    shape = (nx, ny)
    vx = [rng.normal(0, 1, shape) for _ in range(2)]
    vy = [rng.normal(0, 1, shape) for _ in range(2)]
    r = [np.abs(rng.normal(1, 0.1, shape)) + 0.5 for _ in range(2)]
    vxm, vym, rm = (0.5 * (a + b) for a, b in zip((vx[0], vy[0], r[0]),
                                                  (vx[1], vy[1], r[1])))
    pos = np.column_stack([rng.uniform(-1.5, 1.5, 400),
                           rng.uniform(-1.0, 1.0, 400)])
    flags = np.zeros(400, dtype=np.int64)
    args = (vx[0], vxm, vx[1], vy[0], vym, vy[1], r[0], rm, r[1],
            -2.0, 4.0 / nx, nx, -1.5, 3.0 / ny, ny, 0.04, 1e-12)
    a_pos, a_flags = K.rk4_scalar_2d(pos.copy(), flags.copy(), *args)
    b_pos, b_flags = K.NUMPY_IMPLS["rk4_scalar_2d"](pos.copy(), flags.copy(),
                                                    *args)
    np.testing.assert_array_equal(a_pos, b_pos)
    np.testing.assert_array_equal(a_flags, b_flags)


def test_rk4_weighted_backends_bitwise_equal():
    rng = np.random.default_rng(4)
    nx, ny = 48, 64
    shape = (nx, ny)

    def pair():
        f0 = rng.normal(0, 1, shape)
        f1 = f0 + 0.01 * rng.normal(0, 1, shape)
        return f0, 0.5 * (f0 + f1), f1

    jxp, jxm, jzp, jzm = pair(), pair(), pair(), pair()
    rp = tuple(np.abs(f) + 0.4 for f in pair())
    rm_ = tuple(np.abs(f) + 0.4 for f in pair())
    pos = np.column_stack([rng.uniform(-1.0, 1.0, 300),
                           rng.uniform(-1.5, 1.5, 300)])
    w = rng.uniform(0, 1, 300)
    flags = np.zeros(300, dtype=np.int64)
    args = (*jxp, *jxm, *jzp, *jzm, *rp, *rm_,
            -1.5, 3.0 / nx, nx, -2.0, 4.0 / ny, ny, 0.03, 1e-12)
    a_pos, a_flags = K.rk4_weighted_2d(pos.copy(), flags.copy(), w, *args)
    b_pos, b_flags = K.NUMPY_IMPLS["rk4_weighted_2d"](pos.copy(),
                                                      flags.copy(), w, *args)
    np.testing.assert_array_equal(a_pos, b_pos)
    np.testing.assert_array_equal(a_flags, b_flags)


def test_deposit_backends_bitwise_equal():
    rng = np.random.default_rng(5)
    pos = rng.uniform(-3, 3, 5000)
    w = rng.uniform(0, 1, 5000)
    a = K.deposit_cic_1d(pos, w, -4.0, 8.0 / 128, 128)
    b = K.NUMPY_IMPLS["deposit_cic_1d"](pos, w, -4.0, 8.0 / 128, 128)
    np.testing.assert_array_equal(a, b)
    pos2 = np.column_stack([pos, rng.uniform(-2, 2, 5000)])
    a2 = K.deposit_cic_2d(pos2, w, -4.0, 8.0 / 64, 64, -3.0, 6.0 / 48, 48)
    b2 = K.NUMPY_IMPLS["deposit_cic_2d"](pos2, w, -4.0, 8.0 / 64, 64,
                                         -3.0, 6.0 / 48, 48)
    np.testing.assert_array_equal(a2, b2)


def test_deposit_conserves_mass():
    rng = np.random.default_rng(6)
    pos = rng.uniform(-3, 3, 2000)  # all inside
    w = rng.uniform(0, 1, 2000)
    out = K.deposit_cic_1d(pos, w, -4.0, 8.0 / 128, 128)
    assert abs(out.sum() - w.sum()) < 1e-12 * w.sum()