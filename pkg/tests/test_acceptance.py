"""Acceptance criteria, one test each, at the stated tolerances and runtime limits.

Every test prints (and records for the terminal summary) a single line
``[C<n>] PASS|FAIL|SKIP <title> (<seconds>s / <limit>s) <detail>``.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import os
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from scipy import special

from specgcf.dataset import InteractionDataset, load_interactions, sample_batch, split_dataset
from specgcf.evaluation import evaluate, evaluate_popularity
from specgcf.graph import build_adjacency, normalize_adjacency, spmm
from specgcf.polybasis import FilterParams, basis_values, filter_response, transfer
from specgcf.propagation import forward
from specgcf.spectral import analyze, band_correlations, eigendecompose, parse_bases, spectral_filter_oracle
from specgcf.synthetic import load_toy, two_community
from specgcf.training import TrainConfig, fit, loss_and_grad

from conftest import ACCEPTANCE_LINES, random_bipartite

ROOT = Path(__file__).resolve().parents[1]


class Check:
    def __init__(self):
        self.ok = True
        self.notes = []

    def __call__(self, cond, note):
        self.ok &= bool(cond)
        self.notes.append(("" if cond else "!") + note)


def emit(num, status, title, elapsed, limit, detail):
    line = f"[C{num}] {status} {title} ({elapsed:.2f}s / {limit}s) {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)


@contextmanager
def criterion(num, title, limit):
    check = Check()
    t0 = time.perf_counter()
    try:
        yield check
    except BaseException as exc:
        if isinstance(exc, pytest.skip.Exception):
            emit(num, "SKIP", title, time.perf_counter() - t0, limit, str(exc))
        else:
            emit(num, "FAIL", title, time.perf_counter() - t0, limit, f"{type(exc).__name__}: {exc}")
        raise
    elapsed = time.perf_counter() - t0
    check(elapsed < limit, f"runtime {elapsed:.2f}s")
    emit(num, "PASS" if check.ok else "FAIL", title, elapsed, limit, "; ".join(check.notes))
    assert check.ok, check.notes


def rel_fro(x, ref):
    return np.linalg.norm(x - ref) / np.linalg.norm(ref)


def test_c1_eigen_oracle_equivalence():
    ab = [-0.5, 0.0, 1.0, 2.0]
    bases = [("jacobi", a, b) for a in ab for b in ab] + [("chebyshev", 0, 0), ("legendre", 0, 0), ("monomial", 0, 0)]
    with criterion(1, "eigen-oracle equivalence", 30) as check:
        worst, count, max_n = 0.0, 0, 0
        for g in range(20):
            r = np.random.default_rng(1000 + g)
            nu, ni = int(r.integers(20, 100)), int(r.integers(20, 100))
            adj = normalize_adjacency(build_adjacency(random_bipartite(nu, ni, float(r.uniform(0.03, 0.2)), 1000 + g)))
            max_n = max(max_n, adj.n)
            dec = eigendecompose(adj.toarray())
            lam = np.clip(dec.Lambda, -1, 1)
            E0 = r.standard_normal((adj.n, 4))
            for basis, a, b in bases:
                for K in range(5):
                    fp = FilterParams(basis=basis, order=K, a=a, b=b)
                    oracle = spectral_filter_oracle(dec, lambda _: transfer(fp, lam), E0)
                    worst = max(worst, rel_fro(forward(adj, E0, fp).band_stop, oracle))
                    count += 1
        check(max_n <= 200, f"max N {max_n}")
        check(worst <= 1e-8, f"{count} cases, max rel err {worst:.2e}")


def test_c2_special_case_recovery():
    with criterion(2, "special-case recovery", 5) as check:
        x = np.linspace(-1, 1, 101)
        jac = basis_values(FilterParams(order=6, a=0.0, b=0.0), x)
        leg = np.array([special.eval_legendre(k, x) for k in range(7)])
        err = np.abs(jac - leg).max()
        check(err <= 1e-10, f"Legendre max abs err {err:.1e}")

        xs = np.linspace(-0.999, 0.999, 301)
        jv = basis_values(FilterParams(order=6, a=-0.5, b=-0.5), xs)
        tv = np.array([special.eval_chebyt(k, xs) for k in range(7)])
        spread = 0.0
        for k in range(7):
            keep = np.abs(tv[k]) > 1e-3
            ratio = jv[k, keep] / tv[k, keep]
            spread = max(spread, np.ptp(ratio) / abs(ratio.mean()))
        check(spread <= 1e-9, f"Chebyshev ratio spread {spread:.1e}")

        adj = normalize_adjacency(build_adjacency(random_bipartite(60, 80, 0.05, seed=7)))
        E0 = np.random.default_rng(7).standard_normal((adj.n, 8))
        K = 4
        total, cur = E0.copy(), E0
        for _ in range(K):
            cur = spmm(adj, cur)
            total = total + cur
        lightgcn = total / (K + 1)
        got = forward(adj, E0, FilterParams(basis="monomial", order=K)).band_stop
        check(np.array_equal(got, lightgcn), "monomial equals iterated spmm bit-for-bit")


def test_c3_response_curve_signs():
    with criterion(3, "response-curve signs", 1) as check:
        for K in (1, 3):
            curve = filter_response(FilterParams(order=K, a=1.0, b=1.0), "band_stop", [-1.0, 0.0, 1.0])[:, 1]
            check(abs(curve[0] + 0.5) <= 1e-12, f"K={K} r(-1)={float(curve[0])!r}")
            check(abs(curve[2] - (K + 2) / 2) <= 1e-12, f"K={K} r(1)={float(curve[2])!r}")
            if K == 3:
                check(abs(curve[1]) < curve[2] / 3, f"K=3 |r(0)|={abs(curve[1]):.4f}")


def test_c4_gradient_correctness():
    with criterion(4, "end-to-end gradient", 60) as check:
        worst = 0.0
        for seed in range(10):
            r = np.random.default_rng(seed)
            nu, ni = int(r.integers(8, 25)), int(r.integers(8, 25))
            train = random_bipartite(nu, ni, 0.25, seed)
            adj = normalize_adjacency(build_adjacency(train))
            d = int(r.integers(2, 9))
            fp = FilterParams(order=int(r.integers(1, 5)), a=float(r.choice([-0.5, 0, 1, 2])),
                              b=float(r.choice([-0.5, 0, 1, 2])), alpha=float(r.uniform(0, 1)))
            E0 = r.uniform(-0.5, 0.5, (adj.n, d))
            batch = sample_batch(train, 64, r)
            lam = 1e-2
            _, grad = loss_and_grad(adj, E0, fp, batch, lam)
            h = 1e-4
            fd = np.empty_like(E0)
            for idx in np.ndindex(E0.shape):
                Ep, Em = E0.copy(), E0.copy()
                Ep[idx] += h
                Em[idx] -= h
                fd[idx] = (loss_and_grad(adj, Ep, fp, batch, lam)[0] - loss_and_grad(adj, Em, fp, batch, lam)[0]) / (2 * h)
            check(adj.n <= 50 and d <= 8, f"instance {seed}: N={adj.n} d={d}")
            worst = max(worst, (np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-6)).max())
        check(worst <= 1e-4, f"max rel err {worst:.2e}")


# documented fixture for the spectral direction claim
SPECTRAL_FIXTURE = dict(num_users=300, num_items=300, blocks=2, p_in=0.1, p_out=0.01, seed=0)


def test_c5_spectral_direction():
    with criterion(5, "spectral-analysis direction", 60) as check:
        train, _, test = split_dataset(two_community(**SPECTRAL_FIXTURE), 0.8, 0.1, seed=0)
        an = analyze(train, test, parse_bases("jacobi:1.0:1.0,monomial", 3), max_nodes=3000)
        r = dict(an.correlations)
        check(r["jacobi(1,1)"] > r["monomial"], f"r jacobi {r['jacobi(1,1)']:.4f} vs monomial {r['monomial']:.4f}")
        bands = band_correlations(an.decomposition.Lambda, an.target)
        check(abs(bands["outer"]) > abs(bands["mid"]),
              f"|r| |lam|>0.5 {abs(bands['outer']):.4f} vs |lam|<0.25 {abs(bands['mid']):.4f}")


def test_c6_desk_scale_learning():
    with criterion(6, "desk-scale learning", 120) as check:
        train, valid, test = split_dataset(load_toy(), 0.8, 0.1, seed=0)
        adj = normalize_adjacency(build_adjacency(train))
        fp = FilterParams(order=3, a=1.0, b=1.0, alpha=0.1)
        cfg = TrainConfig(embedding_dim=32, max_epochs=50, patience=50, seed=0)
        res = fit(train, valid, adj, fp, cfg)
        check(len(res.history) == 50, f"{len(res.history)} epochs")
        final = forward(adj, res.E0, fp).final
        model = evaluate(final, adj.num_users, test, [train, valid], ks=(20,)).recall(20)
        pop = evaluate_popularity(train, test, [train, valid], ks=(20,)).recall(20)
        check(model >= 1.5 * pop, f"recall@20 {model:.4f} vs popularity {pop:.4f}")
        loss = res.history[-1]["loss"]
        check(loss < 0.6931, f"epoch-50 loss {loss:.4f}")


def test_c7_gowalla_reference_not_gated():
    script = ROOT / "scripts" / "reproduce_gowalla.py"
    with criterion(7, "full-scale reference (script only, not gated)", 30) as check:
        check(script.exists(), "script present")
        proc = subprocess.run([sys.executable, str(script), "--help"], capture_output=True, text=True)
        check(proc.returncode == 0, "script --help runs")
        pytest.skip("multi-hour Gowalla reproduction is run by hand: python3 scripts/reproduce_gowalla.py")


def test_c8_gowalla_counts():
    path = os.environ.get("SPECGCF_GOWALLA")
    with criterion(8, "Gowalla data fidelity", 300) as check:
        if not path or not Path(path).exists():
            pytest.skip("set SPECGCF_GOWALLA to the dump (pair file or dir with train.txt/test.txt) to run")
        path = Path(path)
        if path.is_dir():
            ds = load_interactions([path / "train.txt", path / "test.txt"], format="adjacency")
        else:
            ds = load_interactions(path)
        counts = (ds.num_users, ds.num_items, len(ds))
        check(counts == (29858, 40981, 1027464), f"users/items/interactions {counts}")


def _random_graph(num_users, num_items, edges, seed):
    r = np.random.default_rng(seed)
    keys = np.unique(r.integers(0, num_users * num_items, int(edges * 1.05)))
    keys = r.permutation(keys)[:edges]
    return normalize_adjacency(build_adjacency(InteractionDataset(num_users, num_items, keys // num_items, keys % num_items)))


def _median_times(pair_a, pair_b, E0, trials=5):
    """Median wall time of forward for two (adj, fp) settings, trials interleaved."""
    for adj, fp in (pair_a, pair_b):
        forward(adj, E0, fp)
    times = ([], [])
    for _ in range(trials):
        for slot, (adj, fp) in enumerate((pair_a, pair_b)):
            t0 = time.perf_counter()
            forward(adj, E0, fp)
            times[slot].append(time.perf_counter() - t0)
    return float(np.median(times[0])), float(np.median(times[1]))


def test_c9_complexity_scaling():
    with criterion(9, "complexity scaling", 120) as check:
        E0 = np.random.default_rng(0).standard_normal((20000, 64))
        small, large = _random_graph(10000, 10000, 300_000, 1), _random_graph(10000, 10000, 600_000, 2)
        fp = FilterParams(order=3)
        t1, t2 = _median_times((small, fp), (large, fp), E0)
        check(t2 / t1 <= 2.5, f"2x edges: x{t2 / t1:.2f}")
        k2, k4 = _median_times((small, FilterParams(order=2)), (small, FilterParams(order=4)), E0)
        check(k4 / k2 <= 2.5, f"2x K: x{k4 / k2:.2f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
