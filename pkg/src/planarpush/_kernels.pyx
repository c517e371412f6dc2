# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled MPC rollout kernel.

Semantics must match the pure-Python propagation in planarpush.mpc
(_propagate / rollout_cost / TransitionModels.predict_*); the test suite
pins cross-backend agreement.
"""
from libc.math cimport atan2, cos, exp, fabs, fmod, hypot, sin

cdef double PI = 3.141592653589793
cdef double TWO_PI = 6.283185307179586


cdef inline double wrap_pi(double theta) nogil:
    # (-pi, pi], mirroring se2.wrap_angle
    cdef double r = fmod(PI - theta, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    return PI - r


cdef inline double wrap_2pi(double alpha) nogil:
    # [0, 2*pi), mirroring models.wrap_alpha
    cdef double a = fmod(alpha, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a >= TWO_PI:
        a = 0.0
    return a


cdef inline void gp_mean3(double[:, ::1] x_train, double[:, ::1] weights,
                          double[::1] ymean, double[::1] ls,
                          double q0, double q1, double q2, double* out) nogil:
    cdef Py_ssize_t i, n = x_train.shape[0]
    cdef double d0, d1, d2, k
    cdef double m0 = 0.0, m1 = 0.0, m2 = 0.0
    for i in range(n):
        d0 = (q0 - x_train[i, 0]) / ls[0]
        d1 = (q1 - x_train[i, 1]) / ls[1]
        d2 = (q2 - x_train[i, 2]) / ls[2]
        k = exp(-0.5 * (d0 * d0 + d1 * d1 + d2 * d2))
        m0 += k * weights[i, 0]
        m1 += k * weights[i, 1]
        m2 += k * weights[i, 2]
    out[0] = m0 + ymean[0]
    out[1] = m1 + ymean[1]
    out[2] = m2 + ymean[2]


def rollout_batch(double[:, ::1] fwd_x, double[:, ::1] fwd_w,
                  double[::1] fwd_mean, double[::1] fwd_ls,
                  double[:, ::1] inv_x, double[:, ::1] inv_w,
                  double[::1] inv_mean, double[::1] inv_ls,
                  double[::1] inv_scale, double[::1] train_alpha,
                  double beta_max,
                  double[::1] x0, double[:, ::1] waypoints,
                  double w_pos, double w_rot,
                  double[:, :, ::1] perts,
                  double[::1] costs_out, double[:, :, ::1] poses_out,
                  double[:, :, ::1] controls_out):
    """Propagate Q perturbed rollouts and fill costs/poses/controls.

    Returns the number of degenerate inverse predictions that used the
    nearest-training-sample fallback.
    """
    cdef Py_ssize_t n_roll = perts.shape[0]
    cdef Py_ssize_t horizon = perts.shape[1]
    cdef Py_ssize_t n_wp = waypoints.shape[0]
    cdef Py_ssize_t n_inv = inv_x.shape[0]
    cdef Py_ssize_t q, k, j, i, best_j, best_i
    cdef int fallbacks = 0
    cdef double x, y, th, d, best_d, c, s
    cdef double gx, gy, gth, invth, ic, is_
    cdef double px, py, pth
    cdef double q0, q1, q2, dist2, best_dist2
    cdef double alpha, beta, ca, sa
    cdef double mean[3]
    cdef double cost

    with nogil:
        for q in range(n_roll):
            x = x0[0]
            y = x0[1]
            th = x0[2]
            poses_out[q, 0, 0] = x
            poses_out[q, 0, 1] = y
            poses_out[q, 0, 2] = th
            cost = 0.0
            for k in range(horizon):
                # nearest waypoint; ties toward the larger index
                best_j = 0
                best_d = 1e300
                for j in range(n_wp):
                    d = (w_pos * hypot(x - waypoints[j, 0], y - waypoints[j, 1])
                         + w_rot * fabs(wrap_pi(th - waypoints[j, 2])))
                    if d <= best_d:
                        best_d = d
                        best_j = j
                if best_j + 1 < n_wp:
                    best_j += 1

                # desired body-frame motion toward the successor waypoint
                invth = wrap_pi(-th)
                ic = cos(invth)
                is_ = sin(invth)
                c = cos(th)
                s = sin(th)
                gx = (-(c * x + s * y)
                      + ic * waypoints[best_j, 0] - is_ * waypoints[best_j, 1])
                gy = (-(-s * x + c * y)
                      + is_ * waypoints[best_j, 0] + ic * waypoints[best_j, 1])
                gth = wrap_pi(invth + waypoints[best_j, 2])

                # right-compose the random perturbation
                px = perts[q, k, 0]
                py = perts[q, k, 1]
                pth = perts[q, k, 2]
                c = cos(gth)
                s = sin(gth)
                gx = gx + c * px - s * py
                gy = gy + s * px + c * py
                gth = wrap_pi(gth + pth)

                # inverse model: scaled motion -> (cos a, sin a, beta)
                q0 = gx * inv_scale[0]
                q1 = gy * inv_scale[1]
                q2 = gth * inv_scale[2]
                gp_mean3(inv_x, inv_w, inv_mean, inv_ls, q0, q1, q2, mean)
                if hypot(mean[0], mean[1]) < 1e-6:
                    best_i = 0
                    best_dist2 = 1e300
                    for i in range(n_inv):
                        dist2 = ((q0 - inv_x[i, 0]) * (q0 - inv_x[i, 0])
                                 + (q1 - inv_x[i, 1]) * (q1 - inv_x[i, 1])
                                 + (q2 - inv_x[i, 2]) * (q2 - inv_x[i, 2]))
                        if dist2 < best_dist2:
                            best_dist2 = dist2
                            best_i = i
                    alpha = train_alpha[best_i]
                    fallbacks += 1
                else:
                    alpha = wrap_2pi(atan2(mean[1], mean[0]))
                beta = mean[2]
                if beta < -beta_max:
                    beta = -beta_max
                elif beta > beta_max:
                    beta = beta_max
                controls_out[q, k, 0] = alpha
                controls_out[q, k, 1] = beta

                # forward model: control features -> body motion
                ca = cos(alpha)
                sa = sin(alpha)
                gp_mean3(fwd_x, fwd_w, fwd_mean, fwd_ls, ca, sa, beta, mean)
                gth = wrap_pi(mean[2])

                # advance the pose
                c = cos(th)
                s = sin(th)
                x = x + c * mean[0] - s * mean[1]
                y = y + s * mean[0] + c * mean[1]
                th = wrap_pi(th + gth)
                poses_out[q, k + 1, 0] = x
                poses_out[q, k + 1, 1] = y
                poses_out[q, k + 1, 2] = th

                best_d = 1e300
                for j in range(n_wp):
                    d = (w_pos * hypot(x - waypoints[j, 0], y - waypoints[j, 1])
                         + w_rot * fabs(wrap_pi(th - waypoints[j, 2])))
                    if d < best_d:
                        best_d = d
                cost += best_d
            costs_out[q] = cost
    return fallbacks
