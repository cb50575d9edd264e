"""Smoke test for the regap_py extension module.

Build the library first:

    cargo build -p regap-python --release --features extension-module

then run `python3 python/smoke_test.py [path/to/libregap_py.so]`. Without an
argument the script looks in target/release and target/debug, then falls
back to an installed `regap_py` (for example a wheel built by maturin).
"""

import importlib.util
import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load(path=None):
    candidates = [path] if path else [
        os.path.join(ROOT, "target", profile, name)
        for profile in ("release", "debug")
        for name in ("libregap_py.so", "libregap_py.dylib", "regap_py.dll")
    ]
    found = next((c for c in candidates if c and os.path.isfile(c)), None)
    if found is None:
        try:
            import regap_py  # installed from a wheel
        except ImportError:
            sys.exit("regap_py library not found; build it with cargo first")
        return regap_py
    # the import machinery wants the module name as the file stem
    tmp = tempfile.mkdtemp()
    ext = ".pyd" if found.endswith(".dll") else ".so"
    target = os.path.join(tmp, "regap_py" + ext)
    shutil.copy(found, target)
    spec = importlib.util.spec_from_file_location("regap_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    rp = load(sys.argv[1] if len(sys.argv) > 1 else None)

    z, y = [1.0, 2.0, 0.5], [1.5, 1.0, 0.5]
    kl = sum(zi * math.log(zi / yi) - zi + yi for zi, yi in zip(z, y))
    assert close(rp.kl_divergence(z, y), kl)

    c, g = 0.5, 0.3
    pred = rp.predict_rate(c, g)
    eta = c * math.sqrt(1 - g * g) + g * math.sqrt(1 - c * c)
    assert close(pred["eta"], eta), pred

    norms = [0.8 ** k for k in range(40)]
    assert close(rp.measure_rate(norms), 0.8, 1e-8)

    a, b = [[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]], [1.0, 2.0]
    p = rp.project_affine(a, b, [3.0, -1.0, 0.5])
    assert all(close(sum(r * v for r, v in zip(row, p)), bi) for row, bi in zip(a, b))
    assert rp.project_box([0.0, 0.0], [1.0, math.inf], [-2.0, 5.0]) == [0.0, 5.0]

    x = [4.0, 3.0, -1.0]
    approx, tau = rp.project_regularized_approx(a, b, 0.1, x)
    exact = rp.project_regularized_exact(a, b, 0.1, x)
    for q in (approx, exact):
        r = [sum(ai * qi for ai, qi in zip(row, q)) - bi for row, bi in zip(a, b)]
        assert close(0.5 * sum(v * v for v in r), 0.1, 1e-6)
    assert 0.0 < tau < 1.0

    theta = math.pi / 3
    est = rp.cbar_subspaces([[1.0, 0.0]], [[math.cos(theta), math.sin(theta)]])
    assert close(est["c_bar"], math.cos(theta))

    exact_run = rp.two_lines(theta, [1.0, 2.0], max_iter=200)
    assert exact_run.measured_rate() <= math.cos(theta) + 0.02, exact_run
    inexact_run = rp.two_lines(theta, [1.0, 2.0], gamma=0.2, max_iter=200)
    bound = rp.predict_rate(math.cos(theta), 0.2)["eta"]
    assert inexact_run.measured_rate() <= bound + 0.02
    assert exact_run.to_csv().startswith("k,")

    inst = rp.PhaseInstance.synthesize(16, 16, seed=1)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "cup.bin")
        inst.write(path)
        again = rp.PhaseInstance.read(path)
        assert again.observed == inst.observed and again.shape == (16, 16)
    rec = inst.reconstruct(inst.epsilon_for(1.0), schedule="constant_one", max_iter=500, seed=1)
    assert rec.error < 0.2, rec.error
    assert len(rec.image) == 256 and rec.trace.iterations > 0

    try:
        rp.project_box([1.0], [0.0], [0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("an inverted box must raise ValueError")

    print("regap_py smoke test passed")


if __name__ == "__main__":
    main()
