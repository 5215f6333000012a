"""Exact biharmonic Steklov eigenvalues on an annulus, in extended precision.

For angular mode m every biharmonic function is a combination of four radial
profiles; Galerkin projection of the weak form onto that span is exact, so the
finite eigenvalues of the resulting 4x4 pencil are the true eigenvalues of the
annulus ``1 - eps < r < 1``. Used only as a test oracle for the strip solver.
"""

import mpmath as mp


def _profiles(m):
    # (power, has_log) pairs spanning radial biharmonic solutions for mode m
    if m == 0:
        return [(0, False), (0, True), (2, False), (2, True)]
    if m == 1:
        return [(1, False), (-1, False), (3, False), (1, True)]
    return [(m, False), (-m, False), (m + 2, False), (2 - m, False)]


def _radial(p, log):
    if not log:
        return (lambda r: r**p, lambda r: p * r ** (p - 1), lambda r: p * (p - 1) * r ** (p - 2))
    return (
        lambda r: r**p * mp.log(r),
        lambda r: p * r ** (p - 1) * mp.log(r) + r ** (p - 1),
        lambda r: p * (p - 1) * r ** (p - 2) * mp.log(r) + (2 * p - 1) * r ** (p - 2),
    )


def annulus_theta(m, eps, mu, b=1, dps=50):
    """Both rescaled eigenvalues ``lambda / eps`` of angular mode ``m``, ascending."""
    with mp.workdps(dps):
        eps, mu, b = mp.mpf(eps), mp.mpf(mu), mp.mpf(b)
        r0 = 1 - eps
        fs = [_radial(p, lg) for p, lg in _profiles(m)]
        ang = 2 * mp.pi if m == 0 else mp.pi
        A = mp.matrix(4, 4)
        B = mp.matrix(4, 4)
        for i in range(4):
            for j in range(i, 4):
                f, g = fs[i], fs[j]

                def integrand(r):
                    hrr = f[2](r) * g[2](r)
                    htt = (f[1](r) / r - m * m * f[0](r) / r**2) * (g[1](r) / r - m * m * g[0](r) / r**2)
                    hrt = 2 * m * m * (f[1](r) / r - f[0](r) / r**2) * (g[1](r) / r - g[0](r) / r**2)
                    return (hrr + htt + hrt) * r

                vol = mp.quad(integrand, [r0, 1])
                edge = f[1](1) * g[1](1) + f[1](r0) * g[1](r0) * r0
                mass = f[0](1) * g[0](1) + f[0](r0) * g[0](r0) * r0
                A[i, j] = A[j, i] = ang * (vol + mu * edge)
                B[i, j] = B[j, i] = ang * mass
        C = mp.inverse(A + b * B) * B
        vals = mp.eig(C, left=False, right=False)
        mus = sorted((mp.re(v) for v in vals), reverse=True)[:2]
        return [float((1 / x - b) / eps) for x in mus]
