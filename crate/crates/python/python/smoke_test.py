"""Quick check that the extension imports and agrees with closed forms."""

import math

import smoothdiv_py as sd


def close(a, b, tol=1e-8):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    rho = sd.State.classical([0.75, 0.25])
    sigma = sd.State.classical([0.5, 0.5])
    assert rho.dim == 2

    # D(rho||sigma) = 1 - h(1/4)
    h = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
    assert close(sd.umegaki(rho, sigma), 1 - h)
    assert close(sd.dmax(rho, sigma), math.log2(1.5))
    assert close(sd.dh(rho, sigma, 0.0), 0.0)

    # two pure qubits with overlap 0.9
    a, b = math.sqrt(0.9), math.sqrt(0.1)
    p = sd.State([[1, 0], [0, 0]])
    q = sd.State([[a * a, a * b], [a * b, b * b]])
    _, dh = sd.pure_closed_forms(0.9, 0.1)
    assert close(sd.dh(p, q, 0.1), dh)
    dt, _ = sd.pure_closed_forms(0.9, 0.3)
    assert close(sd.dtilde_max(p, q, 0.3), dt)
    assert close(sd.dh_sdp(p, q, 0.1), dh, 1e-6)

    r, s = sd.sample_pair("hs_mixed", 3, 11)
    again = sd.State.from_json(r.to_json())
    assert again.matrix() == r.matrix()
    assert sd.smooth_dmax(r, s, 0.2) <= sd.dmax(r, s) + 1e-9

    rep = sd.check_frenkel(rho, sigma)
    assert rep["passed"], rep

    rep = sd.run_suite("equivalence", {"dims": [2], "samples": 2, "seed": 1, "grid": {"eps": [0.3]}})
    assert rep["passed"], rep["relations"]

    try:
        sd.dtilde_max(rho, sigma, 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("eps out of range accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
