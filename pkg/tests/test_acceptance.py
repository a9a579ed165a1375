"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every criterion runs at its stated tolerance and inside its wall-clock budget.
"""
import contextlib
import json
import math
import time

import numpy as np
import pytest

import gqp_lab.cli as cli
from gqp_lab import surfaces as S
from gqp_lab import spectral as Sp
from gqp_lab.config import RunConfig
from gqp_lab.potential import potential_fields
from gqp_lab.topology import analyze_topology
from gqp_lab.tridiag import eigen_lowest


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(number, title, budget):
        t0 = time.perf_counter()
        notes = {}
        try:
            yield notes
            elapsed = time.perf_counter() - t0
            assert elapsed <= budget, f"took {elapsed:.2f} s, budget {budget} s"
        except BaseException as exc:
            elapsed = time.perf_counter() - t0
            with capsys.disabled():
                print(f"\nFAIL criterion {number} ({title}) {elapsed:.2f}s/{budget}s: {exc}")
            raise
        detail = " ".join(f"{k}={v}" for k, v in notes.items())
        with capsys.disabled():
            print(f"\nPASS criterion {number} ({title}) {elapsed:.2f}s/{budget}s {detail}")
    return run


def _rel(a, b, scale):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), scale)))


def test_1_identity_suite(criterion):
    with criterion(1, "pointwise identities", 1.0) as notes:
        worst = 0.0
        for chart in (S.sphere(), S.catenoid(), S.torus(), S.bilayer_neck()):
            u, v = S.sample_points(chart, 1000, seed=2024)
            _, cv, sd = potential_fields(chart, u, v)
            # relative to the local curvature scale where a quantity vanishes identically
            k1 = np.sqrt(cv.kappa1 ** 2 + cv.kappa2 ** 2)
            k2 = k1 ** 2
            errs = [
                _rel(sd.grad_n_sq, 4 * cv.H ** 2 - 2 * cv.K, k2),
                _rel(sd.div_n, -2 * cv.H, k1),
                _rel(sd.n_lap_n, -sd.grad_n_sq, k2),
                _rel(sd.n_lap_n + sd.div_n ** 2, 2 * cv.K, k2),
                _rel(sd.V_dacosta, -(1 / 8.0 / 0.5) * (2 * sd.grad_n_sq - sd.div_n ** 2), k2),
            ]
            assert max(errs) < 1e-10, (chart.kind, errs)
            worst = max(worst, max(errs))
        notes["max_rel"] = f"{worst:.1e}"


def test_2_gauss_bonnet(criterion):
    with criterion(2, "Gauss-Bonnet", 5.0) as notes:
        sph = analyze_topology(S.sphere(), (512, 512))
        tor = analyze_topology(S.torus(), (512, 512))
        assert abs(sph.total_curvature - 4 * math.pi) <= 1e-8
        assert abs(tor.total_curvature) <= 1e-8
        notes["sphere_err"] = f"{abs(sph.total_curvature - 4 * math.pi):.1e}"
        notes["torus"] = f"{tor.total_curvature:.1e}"


def test_3_degrees(criterion):
    with criterion(3, "Gauss map degrees", 10.0) as notes:
        cat = analyze_topology(S.catenoid(), (512, 512), T=20.0)
        assert abs(cat.signed_degree) == 1 and cat.signed_degree_residual < 1e-6
        bil = analyze_topology(S.bilayer_neck(), (512, 512), T=20.0)
        assert abs(bil.signed_degree) == 1 and bil.signed_degree_residual < 1e-3
        tor = analyze_topology(S.torus(), (512, 512))
        assert abs(tor.signed_degree_value) <= 1e-6
        assert tor.absolute_degree_rounded == 2
        assert abs(4 * math.pi * tor.absolute_degree - 8 * math.pi) <= 1e-6
        notes["catenoid_res"] = f"{cat.signed_degree_residual:.1e}"
        notes["bilayer_res"] = f"{bil.signed_degree_residual:.1e}"
        notes["torus_abs"] = f"{tor.absolute_degree:.12f}"


def test_4_bogomolnyi_and_estimators(criterion, tmp_path):
    with criterion(4, "Bogomolnyi and estimators", 10.0) as notes:
        T = 20.0
        cat = analyze_topology(S.catenoid(), (512, 512), T=T)
        assert abs(cat.dirichlet_energy - 8 * math.pi * math.tanh(T)) <= 1e-6
        assert cat.dirichlet_energy >= 4 * math.pi
        assert abs(cat.N_sigma_lower - 8) <= 1e-4 and cat.N_sigma_lower >= 4
        assert abs(cat.N_dacosta - 4) <= 1e-4 and cat.N_dacosta >= 4 - 1e-4
        tor = analyze_topology(S.torus(2.0, 1.0), (512, 512))
        assert abs(tor.willmore_energy - 4 * math.pi ** 2 / math.sqrt(3)) <= 1e-6
        assert abs(tor.N_paper - 8 / math.pi * tor.willmore_energy) <= 1e-9
        assert tor.N_paper >= 8
        # Willmore-type minimum over the aspect ratio, by sweep then bounded refinement
        cfg = RunConfig(surface="torus", r=1.0, grid=(128, 128), param="R", range=(1.1, 2.0),
                        steps=10, out=str(tmp_path / "sweep"))
        report, code = cli.cmd_sweep(cfg)
        assert code == 0
        argmin = report["sweep"]["minimum"]["refined_argmin"]
        assert abs(argmin - math.sqrt(2)) <= 0.02
        notes["dirichlet_err"] = f"{abs(cat.dirichlet_energy - 8 * math.pi * math.tanh(T)):.1e}"
        notes["N_paper_torus"] = f"{tor.N_paper:.6f}"
        notes["argmin_R/r"] = f"{argmin:.6f}"


def test_5_spectral_validation(criterion):
    with criterion(5, "spectral validation", 60.0) as notes:
        # unit sphere, no potential, full 2D operator
        ev = Sp.eigenvalues_2d(Sp.SpectralProblem(S.sphere(), potential="none"), 16, (256, 256))
        groups = np.split(ev, np.cumsum([1, 3, 5])[:])
        for ell, group in enumerate(groups):
            exact = ell * (ell + 1)
            assert group.size == 2 * ell + 1
            if exact == 0:
                assert np.all(np.abs(group) < 1e-3)
            else:
                assert np.all(np.abs(group - exact) / exact < 1e-3)
        # the same through the channel decomposition
        res = Sp.count_bound_states(Sp.SpectralProblem(S.sphere(), potential="none", lmax=3, N=1024),
                                    n_eigs=4)
        for ell in range(4):
            got = res.eigenvalues[ell][: 4 - ell]
            exact = np.array([(ell + n) * (ell + n + 1) for n in range(4 - ell)], dtype=float)
            assert np.all(np.abs(got - exact) <= 1e-3 * np.maximum(exact, 1.0))
        # free box: observed order of the finite-difference error
        L = 10.0
        errs = []
        for N in (128, 256, 512, 1024):
            e = eigen_lowest(Sp.discretize_1d(Sp.flat_system(None, -L, L), N), 3)
            errs.append(np.abs(e - (np.arange(1, 4) * math.pi / (2 * L)) ** 2))
        order = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(order >= 1.9)
        # torus: 2D operator against the union of 1D channels
        rec = Sp.cross_check_2d(Sp.SpectralProblem(S.torus(), potential="dacosta", N=512), k=8,
                                resolution=(128, 128), strict=False)
        assert rec["ok"], rec
        notes["min_order"] = f"{order.min():.3f}"
        notes["torus_worst_diff/tol"] = f"{max(d / t for d, t in zip(rec['difference'], rec['tolerance'])):.2f}"


def test_6_catenoid_bound_states(criterion, tmp_path, capsys):
    with criterion(6, "catenoid bound states", 60.0) as notes:
        T = 20.0
        res = Sp.count_bound_states(Sp.SpectralProblem(S.catenoid(), T=T))
        assert res.ground_energy < 0
        assert res.ground_energy + res.ground_energy_error < 0
        rq, sigma = Sp.variational_bound(S.catenoid())
        assert rq < 0
        rq_box, _ = Sp.variational_bound(S.catenoid(), T=T)
        assert res.ground_energy <= rq_box + 10 * res.ground_energy_error
        first, _, last = res.levels
        assert (first.N, last.N) == (res.N, 2 * res.N) and last.T == 2 * first.T
        assert first.bound_count == last.bound_count == res.bound_count
        # the report prints the computed count next to the semiclassical figure
        out = tmp_path / "spectrum"
        code = cli.main(["spectrum", "--surface", "catenoid", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        report = json.loads((out / "report.json").read_text())
        comp = [c for c in report["paper_comparison"] if c["quantity"] == "bound_count"]
        assert len(comp) == 1 and comp[0]["paper_value"] == 4
        assert comp[0]["computed"] == res.bound_count
        assert comp[0]["status"] == ("agree" if res.bound_count >= 4 else "disagree")
        assert f"published bound: bound_count >= 4, computed {res.bound_count} -> {comp[0]['status']}" in printed
        notes["E0"] = f"{res.ground_energy:.7f}"
        notes["gaussian_RQ"] = f"{rq:.5f}"
        notes["count"] = f"{first.bound_count}/{last.bound_count}"
        notes["paper_bound_agrees"] = comp[0]["status"]


def test_7_determinism(criterion, tmp_path):
    with criterion(7, "determinism", 30.0) as notes:
        out = tmp_path / "run"
        texts = []
        for workers in (1, 8, 1, 8):
            assert cli.main(["analyze", "--surface", "catenoid", "--workers", str(workers),
                             "--out", str(out)]) == 0
            texts.append((out / "report.json").read_bytes())
        stripped = [b"\n".join(line for line in t.split(b"\n") if b'"generated_at"' not in line)
                    for t in texts]
        assert all(s == stripped[0] for s in stripped)
        notes["runs"] = len(texts)
        notes["bytes"] = len(texts[0])
