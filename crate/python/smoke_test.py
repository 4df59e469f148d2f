"""Smoke test for the noisy_ica_py extension.

Build with `maturin develop -m crates/py/Cargo.toml`, or
`cargo build --release -p noisy-ica-py` and put
`target/release/libnoisy_ica_py.so` on PYTHONPATH as `noisy_ica_py.so`.
"""

import json
import math

import noisy_ica_py as ica


def main():
    model = ica.MixingModel(3, rho=0.1, seed=7, sources=["uniform", "laplace:1", "exponential:5"])
    data = model.generate(20000, seed=1)
    assert (data.n, data.k) == (20000, 3)

    res = ica.demix(data, contrast="chf", seed=3)
    err = ica.amari_error(res.b_hat, model.b)
    print(f"chf amari error: {err:.4f}")
    assert err < 0.2

    s = ica.score(data, res.b_hat_inv, probes=50, seed=2)
    assert math.isfinite(s["mean"])

    value, grad, hess = ica.evaluate_contrast("cgf", [0.1, 0.2, -0.1], data)
    assert math.isfinite(value) and len(grad) == 3 and len(hess) == 3

    out = json.loads(ica.run_meta(data, probes=50, seed=4, truth=model.b))
    print("meta winner:", out["winner"])
    assert out["winner"] in {"pegi", "chf", "cgf"}
    print("ok")


if __name__ == "__main__":
    main()
