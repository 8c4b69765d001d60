"""Compiled Dormand-Prince 5(4) stepper specialised to the mirrored FHN field.

Stop conditions (spike count, section crossings, convergence, window exit) are
checked inside the loop so long simulations can terminate early; exact event
times are recovered afterwards from the stored dense-output coefficients.
"""
import numpy as np
from numba import njit

STATUS_T_END = 0
STATUS_CONVERGED = 1
STATUS_WINDOW_EXIT = 2
STATUS_SPIKE_LIMIT = 3
STATUS_SECTION_LIMIT = 4
STATUS_STEP_UNDERFLOW = -1
STATUS_MAX_STEPS = -2

# Dormand-Prince tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
A71, A73, A74, A75, A76 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0


@njit(cache=True)
def _expit(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def field(v, n, eps, i_app, v0, n0, sign):
    dv = v - v * v * v / 3.0 - n * n + i_app
    dn = eps * (2.0 * _expit(5.0 * (v - v0)) + n0 - n)
    return sign * dv, sign * dn


@njit(cache=True)
def _stiff_cap(v, n, eps, v0):
    # keep h * |lambda| inside the real stability interval of DOPRI5 (about 3.3);
    # otherwise the error estimate can accept steps that freeze a fast mode
    s = _expit(5.0 * (v - v0))
    a, b, c, d = 1.0 - v * v, -2.0 * n, eps * 10.0 * s * (1.0 - s), -eps
    tr, det = a + d, a * d - b * c
    disc = tr * tr - 4.0 * det
    rho = 0.5 * (abs(tr) + np.sqrt(disc)) if disc >= 0.0 else np.sqrt(abs(det))
    return 2.5 / rho if rho > 1e-12 else np.inf


@njit(cache=True)
def _grow(ts, ys, cs, cap):
    ts2 = np.empty(cap)
    ys2 = np.empty((cap, 2))
    cs2 = np.empty((cap, 5, 2))
    m = ts.shape[0]
    ts2[:m] = ts
    ys2[:m] = ys
    cs2[:m] = cs
    return ts2, ys2, cs2


@njit(cache=True)
def run(
    v_init,
    n_init,
    t_end,
    eps,
    i_app,
    v0,
    n0,
    sign,
    rtol,
    atol,
    max_step,
    spike_thr,
    spike_rearm,
    max_spikes,
    sec_dir,
    sec_rho,
    sec_vlo,
    sec_vhi,
    sec_arm_on_spike,
    max_sec,
    conv_on,
    conv_tol,
    conv_dt,
    win_vlo,
    win_vhi,
    max_steps,
):
    """Integrate from t = 0 to ``t_end``; ``sign = -1`` integrates backward in time.

    Returns (t, y, cont, status) where ``cont[i]`` holds the five dense-output
    rows of step i (valid on [t[i], t[i+1]]).
    """
    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, 2))
    cs = np.empty((cap, 5, 2))
    ts[0] = 0.0
    ys[0, 0] = v_init
    ys[0, 1] = n_init
    m = 1

    t = 0.0
    v = v_init
    n = n_init
    k1v, k1n = field(v, n, eps, i_app, v0, n0, sign)

    # initial step (Hairer's heuristic, one pass)
    sv = atol + rtol * abs(v)
    sn = atol + rtol * abs(n)
    d0 = np.sqrt(0.5 * ((v / sv) ** 2 + (n / sn) ** 2))
    d1 = np.sqrt(0.5 * ((k1v / sv) ** 2 + (k1n / sn) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, max_step, t_end)

    armed = v < spike_thr
    spikes = 0
    seen_spike = False
    sec_count = 0
    t_check = 0.0
    vc = v
    nc = n
    status = STATUS_T_END
    steps = 0
    reject_streak = 0

    while t < t_end:
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < 1e-14 * max(1.0, abs(t)):
            status = STATUS_STEP_UNDERFLOW
            break
        if t + h > t_end:
            h = t_end - t
        steps += 1

        k2v, k2n = field(v + h * A21 * k1v, n + h * A21 * k1n, eps, i_app, v0, n0, sign)
        k3v, k3n = field(
            v + h * (A31 * k1v + A32 * k2v), n + h * (A31 * k1n + A32 * k2n), eps, i_app, v0, n0, sign
        )
        k4v, k4n = field(
            v + h * (A41 * k1v + A42 * k2v + A43 * k3v),
            n + h * (A41 * k1n + A42 * k2n + A43 * k3n),
            eps,
            i_app,
            v0,
            n0,
            sign,
        )
        k5v, k5n = field(
            v + h * (A51 * k1v + A52 * k2v + A53 * k3v + A54 * k4v),
            n + h * (A51 * k1n + A52 * k2n + A53 * k3n + A54 * k4n),
            eps,
            i_app,
            v0,
            n0,
            sign,
        )
        k6v, k6n = field(
            v + h * (A61 * k1v + A62 * k2v + A63 * k3v + A64 * k4v + A65 * k5v),
            n + h * (A61 * k1n + A62 * k2n + A63 * k3n + A64 * k4n + A65 * k5n),
            eps,
            i_app,
            v0,
            n0,
            sign,
        )
        v_new = v + h * (A71 * k1v + A73 * k3v + A74 * k4v + A75 * k5v + A76 * k6v)
        n_new = n + h * (A71 * k1n + A73 * k3n + A74 * k4n + A75 * k5n + A76 * k6n)
        k7v, k7n = field(v_new, n_new, eps, i_app, v0, n0, sign)

        ev = h * (E1 * k1v + E3 * k3v + E4 * k4v + E5 * k5v + E6 * k6v + E7 * k7v)
        en = h * (E1 * k1n + E3 * k3n + E4 * k4n + E5 * k5n + E6 * k6n + E7 * k7n)
        sv = atol + rtol * max(abs(v), abs(v_new))
        sn = atol + rtol * max(abs(n), abs(n_new))
        err = np.sqrt(0.5 * ((ev / sv) ** 2 + (en / sn) ** 2))

        if not np.isfinite(err):
            h *= 0.1
            reject_streak += 1
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** (-0.2))
            reject_streak += 1
            continue
        reject_streak = 0

        if m >= ts.shape[0]:
            ts, ys, cs = _grow(ts, ys, cs, 2 * ts.shape[0])
        dyv = v_new - v
        dyn = n_new - n
        bv = h * k1v - dyv
        bn = h * k1n - dyn
        cs[m - 1, 0, 0] = v
        cs[m - 1, 0, 1] = n
        cs[m - 1, 1, 0] = dyv
        cs[m - 1, 1, 1] = dyn
        cs[m - 1, 2, 0] = bv
        cs[m - 1, 2, 1] = bn
        cs[m - 1, 3, 0] = dyv - h * k7v - bv
        cs[m - 1, 3, 1] = dyn - h * k7n - bn
        cs[m - 1, 4, 0] = h * (D1 * k1v + D3 * k3v + D4 * k4v + D5 * k5v + D6 * k6v + D7 * k7v)
        cs[m - 1, 4, 1] = h * (D1 * k1n + D3 * k3n + D4 * k4n + D5 * k5n + D6 * k6n + D7 * k7n)

        v_old = v
        n_old = n
        t = t + h
        v = v_new
        n = n_new
        k1v = k7v
        k1n = k7n
        ts[m] = t
        ys[m, 0] = v
        ys[m, 1] = n
        m += 1

        fac = 0.9 * err ** (-0.2) if err > 0.0 else 5.0
        h = min(h * min(5.0, max(0.2, fac)), max_step, _stiff_cap(v, n, eps, v0))

        stop = False
        # spike bookkeeping on step endpoints
        if armed and v >= spike_thr and v_old < spike_thr:
            spikes += 1
            seen_spike = True
            armed = False
            if max_spikes > 0 and spikes >= max_spikes:
                status = STATUS_SPIKE_LIMIT
                stop = True
        elif not armed and v < spike_thr - spike_rearm:
            armed = True

        if sec_dir != 0 and not stop:
            crossed = False
            if sec_dir > 0 and n_old < sec_rho and n >= sec_rho:
                crossed = True
            elif sec_dir < 0 and n_old > sec_rho and n <= sec_rho:
                crossed = True
            if crossed and (seen_spike or not sec_arm_on_spike):
                lam = (sec_rho - n_old) / (n - n_old)
                vx = v_old + lam * (v - v_old)
                if sec_vlo <= vx <= sec_vhi:
                    sec_count += 1
                    if max_sec > 0 and sec_count >= max_sec:
                        status = STATUS_SECTION_LIMIT
                        stop = True

        if not stop and (v < win_vlo or v > win_vhi):
            status = STATUS_WINDOW_EXIT
            stop = True

        if conv_on and not stop and t - t_check >= conv_dt:
            fv, fn = field(v, n, eps, i_app, v0, n0, 1.0)
            if np.sqrt(fv * fv + fn * fn) < conv_tol and np.sqrt((v - vc) ** 2 + (n - nc) ** 2) < conv_tol:
                status = STATUS_CONVERGED
                stop = True
            t_check = t
            vc = v
            nc = n
        if stop:
            break

    return ts[:m].copy(), ys[:m].copy(), cs[: m - 1].copy(), status


@njit(cache=True)
def dense_eval(ts, cs, tq):
    """Evaluate the continuous extension at sorted or unsorted query times ``tq``."""
    out = np.empty((tq.shape[0], 2))
    nseg = cs.shape[0]
    for j in range(tq.shape[0]):
        x = tq[j]
        i = np.searchsorted(ts, x, side="right") - 1
        if i < 0:
            i = 0
        if i > nseg - 1:
            i = nseg - 1
        h = ts[i + 1] - ts[i]
        th = (x - ts[i]) / h
        th1 = 1.0 - th
        for c in range(2):
            out[j, c] = cs[i, 0, c] + th * (
                cs[i, 1, c] + th1 * (cs[i, 2, c] + th * (cs[i, 3, c] + th1 * cs[i, 4, c]))
            )
    return out
