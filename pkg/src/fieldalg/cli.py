"""Command-line front end.

Each subcommand runs one structural scenario and writes a deterministic
report.json (canonical float formatting), CSV companions, columnar plot
data under plotdata/, and rendered PNG figures.  Exit codes: 0 all checks
passed, 1 at least one check failed, 2 configuration error, 3 internal
error.

Configuration is a flat key = value text file; unknown keys are
rejected.  Environment overrides: FIELDALG_OUTPUT_DIR replaces the
output directory and FIELDALG_THREADS caps BLAS/OpenMP threads.
"""

from __future__ import annotations

import argparse
import os
import sys


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config handling


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val.strip()
    return out


def _coerce(kind: str, raw: str, key: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str":
            return raw
        if kind == "bool":
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int_list":
            return [int(x) for x in raw.split(",") if x.strip()]
        if kind == "float_list":
            return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind}") from exc
    raise ConfigError(f"unknown schema kind {kind!r}")


def resolve_config(schema: dict, path: str | None) -> dict:
    raw = {}
    if path is not None:
        try:
            with open(path) as f:
                raw = parse_config_text(f.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    config = {}
    for key, (kind, default) in schema.items():
        config[key] = _coerce(kind, raw[key], key) if key in raw else default
    env_out = os.environ.get("FIELDALG_OUTPUT_DIR")
    if env_out:
        config["output_dir"] = env_out
    return config


def _config_lines(config: dict) -> str:
    return "\n".join(f"{k} = {config[k]}" for k in sorted(config)) + "\n"


# ---------------------------------------------------------------------------
# Subcommand implementations (heavy imports stay inside the functions so
# thread caps from the environment land before numpy loads)


CCR_SCHEMA = {
    "output_dir": ("str", "fieldalg-out/ccr"),
    "seed": ("int", 0),
    "finweyl_moduli": ("int_list", [2, 3, 4, 8]),
    "grid_counts": ("int_list", [64, 128, 256, 512]),
    "grid_half_width": ("float", 8.0),
    "xi": ("float_list", [0.7, 1.3]),
    "eta": ("float_list", [-0.4, 0.9]),
    "tolerance_finweyl": ("float", 1e-13),
    "tolerance_grid": ("float", 1e-6),
    "include_pathological": ("bool", False),
}


def cmd_ccr_check(config: dict) -> dict:
    import numpy as np

    from .reporting import (
        figure_residual_curves,
        write_csv,
        write_plotdata,
    )
    from .reps import (
        FiniteWeylRep,
        grid_rep,
        refinement_frame,
        weyl_relation_residual,
    )

    outdir = config["output_dir"]
    checks = {}

    fin_rows = []
    worst_fin = 0.0
    for N in config["finweyl_moduli"]:
        rep = FiniteWeylRep(N=N, d=1)
        worst = 0.0
        for a in range(N):
            for b in range(N):
                for ap in range(N):
                    for bp in range(N):
                        r = weyl_relation_residual(rep, (a, b), (ap, bp))
                        worst = max(worst, r)
        fin_rows.append((N, worst))
        worst_fin = max(worst_fin, worst)
    checks["finweyl_exact"] = {
        "residuals": {str(N): r for N, r in fin_rows},
        "tolerance": config["tolerance_finweyl"],
        "passed": bool(worst_fin < config["tolerance_finweyl"]),
    }
    write_csv(outdir, "finweyl_residuals.csv", ["N", "residual"], fin_rows)

    xi = np.array(config["xi"])
    eta = np.array(config["eta"])
    grid_rows = []
    for m in config["grid_counts"]:
        rep = grid_rep(d=1, m=m, half_width=config["grid_half_width"])
        frame = refinement_frame(rep, coarse_m=min(config["grid_counts"]))
        grid_rows.append((m, weyl_relation_residual(rep, xi, eta, frame=frame)))
    residuals = [r for _, r in grid_rows]
    monotone = all(residuals[i + 1] <= residuals[i] for i in range(len(residuals) - 1))
    checks["grid_refinement"] = {
        "counts": [m for m, _ in grid_rows],
        "residuals": residuals,
        "monotone_nonincreasing": monotone,
        "tolerance": config["tolerance_grid"],
        "passed": bool(monotone and residuals[-1] < config["tolerance_grid"]),
    }
    write_csv(outdir, "grid_residuals.csv", ["m", "residual"], grid_rows)
    write_plotdata(
        outdir,
        "grid_ccr.dat",
        {"m": [m for m, _ in grid_rows], "residual": residuals},
    )
    figure_residual_curves(
        outdir,
        "grid_ccr.png",
        [m for m, _ in grid_rows],
        {"weyl relation residual": residuals},
        xlabel="grid points per axis",
        ylabel="residual",
    )

    if config["include_pathological"]:
        m = max(config["grid_counts"])
        rep = grid_rep(d=1, m=m, half_width=config["grid_half_width"])
        h = rep.spacing
        bad = np.array([0.373 * config["grid_half_width"], 0.77 * np.pi / h])
        r = weyl_relation_residual(rep, bad, eta)
        checks["pathological_pair"] = {
            "xi": bad.tolist(),
            "residual": r,
            "tolerance": config["tolerance_grid"],
            "passed": bool(r < config["tolerance_grid"]),
        }

    return {"checks": checks}


GRADING_SCHEMA = {
    "output_dir": ("str", "fieldalg-out/grading"),
    "seed": ("int", 0),
    "m": ("int", 256),
    # at or below zero the self-dual box sqrt(pi m / 2) is used, which
    # maximizes the conjugation budget of the projection dynamics
    "half_width": ("float", 0.0),
    "recovery_tolerance": ("float", 1e-2),
    "n_generators": ("int", 10),
}


def cmd_grading(config: dict) -> dict:
    import numpy as np

    from .grading import (
        GradedElement,
        gaussian_of_field,
        graded_decompose,
        project_PE,
    )
    from .reporting import figure_residual_curves, write_csv, write_plotdata
    from .reps import grid_rep, selfdual_half_width
    from .semilattice import closure, cumulative_sums, moebius_invert
    from .symplectic import subspace

    outdir = config["output_dir"]
    L = config["half_width"]
    if L <= 0:
        L = selfdual_half_width(config["m"])
    rep = grid_rep(d=1, m=config["m"], half_width=L)
    space = rep.ambient
    rng = np.random.default_rng(config["seed"])
    checks = {}

    # Boolean square on the two coordinate lines.
    Lx = subspace(space, [1.0, 0.0])
    Lk = subspace(space, [0.0, 1.0])
    S = closure([Lx, Lk])
    i0 = S.index_of(subspace(space, []))
    ix = S.index_of(Lx)
    ik = S.index_of(Lk)
    ifull = S.max_index()

    Tx = gaussian_of_field(rep, (1.0, 0.0), width=0.9)
    Tk = gaussian_of_field(rep, (0.0, 1.0), width=0.7)
    eye = np.eye(rep.hilbert_dim)
    components = {
        i0: 0.35 * eye,
        ix: Tx,
        ik: Tk,
        ifull: gaussian_of_field(rep, (1.0, 0.0), width=0.6)
        @ gaussian_of_field(rep, (0.0, 1.0), width=0.8),
    }
    declared = GradedElement(rep=rep, semilattice=S, components=components)
    _, residuals, reports = graded_decompose(rep, declared, seed=config["seed"])
    worst = max(residuals.values())
    checks["boolean_square_recovery"] = {
        "residuals": {str(k): v for k, v in residuals.items()},
        "tolerance": config["recovery_tolerance"],
        "passed": bool(worst < config["recovery_tolerance"]),
    }
    rows = []
    for a, repo in reports.items():
        if repo is None:
            continue
        for r, sdist in zip(repo.schedule[1:], repo.step_distances):
            rows.append((a, r, sdist))
    write_csv(outdir, "projection_steps.csv", ["element", "r", "step_distance"], rows)

    # Dichotomy of conjugation verdicts on generator operators.
    verdict_rows = []
    ok = True
    for i in range(config["n_generators"]):
        angle = rng.uniform(0.1, np.pi - 0.1)
        e = np.array([np.cos(angle), np.sin(angle)])
        E = subspace(space, e)
        T = gaussian_of_field(rep, e, width=rng.uniform(0.6, 1.0))
        keep = i % 2 == 0
        if keep:
            omega = e  # sigma(e, e) = 0: the line is its own complement
            expect = "converged-to-T"
            report = project_PE(rep, T, E, omega)
        else:
            omega = np.array([-np.sin(angle), np.cos(angle)])
            expect = "converged-to-0"
            from .symplectic import sigma_complement

            report = project_PE(rep, T, sigma_complement(subspace(space, omega)), omega)
        verdict_rows.append((i, expect, report.verdict))
        ok = ok and report.verdict == expect
    checks["projection_dichotomy"] = {
        "verdicts": [
            {"case": i, "expected": e, "got": g} for i, e, g in verdict_rows
        ],
        "passed": bool(ok),
    }
    write_csv(outdir, "verdicts.csv", ["case", "expected", "got"], verdict_rows)

    # Moebius round trip in exact integer arithmetic.
    fam = {a: rng.integers(-5, 6, size=(3, 3)) for a in range(len(S))}
    cum = cumulative_sums(S, fam)
    back = moebius_invert(S, cum)
    exact = all(np.array_equal(back[a], fam[a]) for a in range(len(S)))
    checks["moebius_round_trip"] = {"exact": exact, "passed": bool(exact)}

    if rows:
        xs = sorted({r for _, r, _ in rows})
        curves = {}
        for a, *_ in rows:
            curves[f"element {a}"] = [
                next((s for aa, rr, s in rows if aa == a and rr == x), np.nan)
                for x in xs
            ]
        write_plotdata(
            outdir,
            "projection_steps.dat",
            {"r": xs, **{k.replace(" ", "_"): v for k, v in curves.items()}},
        )
        figure_residual_curves(
            outdir,
            "projection_steps.png",
            xs,
            curves,
            xlabel="conjugation scale r",
            ylabel="frame step distance",
        )
    return {"checks": checks}


HVZ_SCHEMA = {
    "output_dir": ("str", "fieldalg-out/hvz"),
    "seed": ("int", 0),
    "m": ("int", 512),
    "half_width": ("float", 10.0),
    "well_depth": ("float", 5.0),
    "two_body": ("bool", False),
    "m2": ("int", 64),
    "half_width2": ("float", 8.0),
    "inf_tolerance": ("float", 0.05),
    "dynamic_check": ("bool", True),
}


def cmd_hvz(config: dict) -> dict:
    import numpy as np

    from .reporting import figure_residual_curves, figure_spectrum, write_csv, write_plotdata
    from .reps import grid_rep
    from .spectra import hvz_essential_spectrum, nbody_hamiltonian, spectrum

    outdir = config["output_dir"]
    checks = {}

    # One dimensional well.
    rep = grid_rep(d=1, m=config["m"], half_width=config["half_width"])
    depth = config["well_depth"]
    gh = nbody_hamiltonian(
        rep,
        clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
        dispersion=lambda k: np.sum(k**2, axis=1),
        potentials={"origin": lambda y: -depth * np.exp(-np.sum(y**2, axis=1))},
    )
    report = hvz_essential_spectrum(gh, dynamic_check=config["dynamic_check"], seed=config["seed"])
    kin_max = float(spectrum(gh.kinetic)[-1])
    one_interval = len(report.intervals) == 1
    lo, hi = report.intervals[0]
    interval_ok = one_interval and abs(lo) < 1e-9 and abs(hi - kin_max) < 1e-9
    bound_states = int(report.discrete_below.size)
    checks["well_1d"] = {
        "intervals": [list(iv) for iv in report.intervals],
        "kinetic_max": kin_max,
        "bound_states_below_zero": bound_states,
        "passed": bool(interval_ok and bound_states >= 1),
    }
    write_csv(
        outdir,
        "well1d_spectrum.csv",
        ["eigenvalue"],
        [(x,) for x in report.eigenvalues[:64]],
    )
    figure_spectrum(
        outdir, "well1d_spectrum.png", report.intervals, report.discrete_below, report.eigenvalues
    )
    if config["dynamic_check"] and report.dynamic_residuals:
        decays = {}
        all_decay = True
        for name, tr in report.dynamic_residuals.items():
            decays[name] = tr["residuals"]
            all_decay = all_decay and tr["residuals"][-1] < tr["residuals"][0]
            write_plotdata(
                outdir,
                f"dynamic_{name}.dat",
                {"r": tr["schedule"], "residual": tr["residuals"]},
            )
        sched = next(iter(report.dynamic_residuals.values()))["schedule"]
        figure_residual_curves(
            outdir,
            "dynamic_residuals.png",
            sched,
            decays,
            xlabel="conjugation scale r",
            ylabel="resolvent frame distance",
        )
        checks["dynamic_cross_check"] = {
            "residuals": {k: v for k, v in decays.items()},
            "passed": bool(all_decay),
        }

    if config["two_body"]:
        rep2 = grid_rep(d=2, m=config["m2"], half_width=config["half_width2"])
        v1 = lambda y: -3.0 * np.exp(-np.sum(y**2, axis=1))
        v2 = lambda y: -2.0 * np.exp(-0.7 * np.sum(y**2, axis=1))
        v12 = lambda y: -1.0 * np.exp(-np.sum(y**2, axis=1))
        gh2 = nbody_hamiltonian(
            rep2,
            clusters=[
                ("X", np.eye(2)),
                ("axis1", np.array([[0.0, 1.0]])),  # potential depends on y_1
                ("axis2", np.array([[1.0, 0.0]])),
                ("origin", np.zeros((0, 2))),
            ],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={"axis1": v1, "axis2": v2, "origin": v12},
        )
        rep_2d = hvz_essential_spectrum(gh2, dynamic_check=False)
        inf_union = min(lo for lo, _ in rep_2d.intervals)
        # Independent oracle: double-box one-axis ground energies.
        repo = grid_rep(d=1, m=2 * config["m2"], half_width=2 * config["half_width2"])
        gho1 = nbody_hamiltonian(
            repo,
            clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={"origin": lambda y: v1(y)},
        )
        gho2 = nbody_hamiltonian(
            repo,
            clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={"origin": lambda y: v2(y)},
        )
        oracle = min(float(spectrum(gho1.matrix)[0]), float(spectrum(gho2.matrix)[0]))
        rel = abs(inf_union - oracle) / max(1e-12, abs(oracle))
        union_all = _interval_union_size(rep_2d.intervals)
        shrinks = []
        for drop in range(len(rep_2d.per_coatom)):
            kept = [
                iv
                for i, entry in enumerate(rep_2d.per_coatom)
                if i != drop
                for iv in _cluster_list(entry["spectrum"], rep_2d.gap_threshold)
            ]
            shrinks.append(_interval_union_size(_merge(kept)) < union_all - 1e-12)
        checks["two_body_2d"] = {
            "inf_union": inf_union,
            "oracle": oracle,
            "relative_error": rel,
            "union_strictly_shrinks_without_some_coatom": bool(any(shrinks)),
            "passed": bool(rel < config["inf_tolerance"]),
        }
        figure_spectrum(
            outdir,
            "two_body_spectrum.png",
            rep_2d.intervals,
            rep_2d.discrete_below,
            rep_2d.eigenvalues[:256],
        )
    return {"checks": checks}


def _cluster_list(values, gap):
    from .spectra import _cluster_intervals

    return _cluster_intervals(values, gap)


def _merge(intervals):
    from .spectra import _merge_intervals

    return _merge_intervals(intervals)


def _interval_union_size(intervals) -> float:
    return sum(hi - lo for lo, hi in intervals)


DEMO2D_SCHEMA = {
    "output_dir": ("str", "fieldalg-out/demo2d"),
    "seed": ("int", 0),
    "m": ("int", 256),
    "half_width": ("float", 8.0),
    "theta": ("float", 0.7853981633974483),
    "dilation_t": ("float", 0.3),
    "rotation_tolerance": ("float", 1e-4),
    "dilation_tolerance": ("float", 1e-3),
}


def cmd_demo2d(config: dict) -> dict:
    import numpy as np

    from .reporting import figure_residual_curves, write_csv, write_plotdata
    from .reps import field_op, frame_distance, gaussian_frame, grid_rep, hermitian_function

    outdir = config["output_dir"]
    rep = grid_rep(d=1, m=config["m"], half_width=config["half_width"])
    frame = gaussian_frame(rep)
    checks = {}

    q = field_op(rep, (0.0, 1.0))
    p = -field_op(rep, (1.0, 0.0))

    theta = config["theta"]
    cot = 1.0 / np.tan(theta)
    U = hermitian_function(p @ p, lambda t: np.exp(-0.5j * cot * t))
    lhs = U @ q @ U.conj().T
    rhs = q - cot * p
    rot_resid = frame_distance(lhs, rhs, frame)
    checks["rotation_identity"] = {
        "theta": theta,
        "residual": rot_resid,
        "tolerance": config["rotation_tolerance"],
        "passed": bool(rot_resid < config["rotation_tolerance"]),
    }

    t = config["dilation_t"]
    delta = 0.5 * (q @ p + p @ q)
    Ut = hermitian_function(delta, lambda s: np.exp(1j * t * s))
    dil_lhs = Ut @ q @ Ut.conj().T
    dil_resid = frame_distance(dil_lhs, np.exp(t) * q, frame)
    checks["dilation_covariance"] = {
        "t": t,
        "residual": dil_resid,
        "tolerance": config["dilation_tolerance"],
        "passed": bool(dil_resid < config["dilation_tolerance"]),
    }

    thetas = np.linspace(0.15, np.pi - 0.15, 9)
    rows = []
    for th in thetas:
        c = 1.0 / np.tan(th)
        Uth = hermitian_function(p @ p, lambda s: np.exp(-0.5j * c * s))
        r = frame_distance(Uth @ q @ Uth.conj().T, q - c * p, frame)
        rows.append((float(th), r))
    write_csv(outdir, "rotation_sweep.csv", ["theta", "residual"], rows)
    write_plotdata(
        outdir,
        "rotation_sweep.dat",
        {"theta": [a for a, _ in rows], "residual": [b for _, b in rows]},
    )
    figure_residual_curves(
        outdir,
        "rotation_sweep.png",
        [a for a, _ in rows],
        {"conjugation residual": [b for _, b in rows]},
        xlabel="theta",
        ylabel="frame residual",
    )
    return {"checks": checks}


ANISO_SCHEMA = {
    "output_dir": ("str", "fieldalg-out/aniso"),
    "seed": ("int", 0),
    "m": ("int", 512),
    "half_width": ("float", 32.0),
    "step_low": ("float", 0.0),
    "step_high": ("float", 1.0),
    "bump_amplitude": ("float", -1.0),
    "differ_threshold": ("float", 0.1),
    "agree_tolerance": ("float", 1e-3),
}


def cmd_aniso(config: dict) -> dict:
    import numpy as np

    from .reporting import figure_residual_curves, write_csv, write_plotdata
    from .reps import gaussian_frame, grid_rep
    from .spectra import kinetic_matrix, translation_limits

    outdir = config["output_dir"]
    rep = grid_rep(d=1, m=config["m"], half_width=config["half_width"])
    mesh = rep.position_mesh()[:, 0]
    kin = kinetic_matrix(rep, lambda k: np.sum(k**2, axis=1))
    eye = np.eye(rep.hilbert_dim)
    # Frame confined near the center so both translation directions stay
    # far from the step transition at every schedule point.
    frame = gaussian_frame(rep, widths=[0.8, 1.2, 1.6], centers=[0.0, 0.5, -0.5])
    omega = np.array([1.0, 0.0])
    checks = {}

    a_minus, a_plus = config["step_low"], config["step_high"]
    vstep = a_minus + (a_plus - a_minus) * 0.5 * (1.0 + np.tanh(mesh))
    Tstep = np.linalg.solve(kin + np.diag(vstep) + 1j * eye, eye)
    lim = translation_limits(rep, Tstep, omega, frame=frame)
    dist = lim.distance if lim.distance is not None else float("nan")
    checks["step_limits_differ"] = {
        "distance": dist,
        "threshold": config["differ_threshold"],
        "converged": bool(lim.converged_plus and lim.converged_minus),
        "passed": bool(
            lim.converged_plus
            and lim.converged_minus
            and dist > config["differ_threshold"]
        ),
    }

    vbump = config["bump_amplitude"] * np.exp(-(mesh**2))
    Tbump = np.linalg.solve(kin + np.diag(vbump) + 1j * eye, eye)
    limb = translation_limits(rep, Tbump, omega, frame=frame)
    distb = limb.distance if limb.distance is not None else float("nan")
    checks["bump_limits_agree"] = {
        "distance": distb,
        "tolerance": config["agree_tolerance"],
        "passed": bool(
            limb.converged_plus
            and limb.converged_minus
            and distb < config["agree_tolerance"]
        ),
    }

    Tfree = np.linalg.solve(kin + 1j * eye, eye)
    limf = translation_limits(rep, Tfree, omega, frame=frame)
    checks["momentum_function_invariant"] = {
        "distance": limf.distance,
        "passed": bool(limf.distance is not None and limf.distance < 1e-10),
    }

    rows = list(
        zip(
            lim.step_plus,
            lim.step_minus,
            limb.step_plus,
            limb.step_minus,
        )
    )
    write_csv(
        outdir,
        "translation_steps.csv",
        ["step_plus_step", "step_minus_step", "bump_plus_step", "bump_minus_step"],
        rows,
    )
    xs = list(range(1, len(lim.step_plus) + 1))
    write_plotdata(
        outdir,
        "translation_steps.dat",
        {
            "step_index": xs,
            "step_plus": lim.step_plus,
            "step_minus": lim.step_minus,
            "bump_plus": limb.step_plus,
            "bump_minus": limb.step_minus,
        },
    )
    figure_residual_curves(
        outdir,
        "translation_steps.png",
        xs,
        {
            "step potential +r": lim.step_plus,
            "step potential -r": lim.step_minus,
            "bump potential +r": limb.step_plus,
            "bump potential -r": limb.step_minus,
        },
        xlabel="schedule step",
        ylabel="frame step distance",
    )
    return {"checks": checks}


MEMBERSHIP_SCHEMA = {
    "output_dir": ("str", "fieldalg-out/membership"),
    "seed": ("int", 7),
    "m_list": ("int_list", [128, 256, 512]),
    "half_width": ("float", 8.0),
    "line_angle": ("float", 1.25),
    "tolerance": ("float", 1e-2),
    "basis_tolerance": ("float", 1e-8),
}


def cmd_membership(config: dict) -> dict:
    import numpy as np

    from .grading import membership_check
    from .reporting import figure_residual_curves, write_csv, write_plotdata
    from .reps import grid_rep, refinement_frame
    from .spectra import laplacian_delta_e
    from .symplectic import subspace
    from .reps import hermitian_function

    outdir = config["output_dir"]
    checks = {}
    angle = config["line_angle"]
    e = np.array([np.cos(angle), np.sin(angle)])
    rows = []
    finals = []
    traces = {"commutator": [], "complement": [], "damping": []}
    for m in config["m_list"]:
        rep = grid_rep(d=1, m=m, half_width=config["half_width"])
        E = subspace(rep.ambient, e)
        delta = laplacian_delta_e(rep, E)
        T = hermitian_function(delta, lambda t: 1.0 / (t + 1.0))
        frame = refinement_frame(rep, coarse_m=min(config["m_list"]) // 2)
        h = rep.spacing
        report = membership_check(
            rep,
            T,
            E,
            scales=np.array([0.25, 0.1, 2 * h, h / 2]),
            tol=config["tolerance"],
            seed=config["seed"],
            frame=frame,
        )
        final = max(
            report.commutator_trace[-1],
            report.complement_residual,
            report.damping_trace[-1],
        )
        finals.append(final)
        traces["commutator"].append(report.commutator_trace[-1])
        traces["complement"].append(report.complement_residual)
        traces["damping"].append(report.damping_trace[-1])
        rows.append(
            (
                m,
                report.commutator_trace[-1],
                report.complement_residual,
                report.damping_trace[-1],
            )
        )
    decreasing = all(
        all(tr[i + 1] <= tr[i] for i in range(len(tr) - 1)) for tr in traces.values()
    )
    checks["resolvent_of_laplacian"] = {
        "m": list(config["m_list"]),
        "final_residuals": finals,
        "decreasing": decreasing,
        "tolerance": config["tolerance"],
        "passed": bool(decreasing and finals[-1] < config["tolerance"]),
    }
    write_csv(
        outdir,
        "membership_residuals.csv",
        ["m", "commutator", "complement", "damping"],
        rows,
    )
    write_plotdata(
        outdir,
        "membership.dat",
        {"m": [r[0] for r in rows], "final_residual": finals},
    )
    figure_residual_curves(
        outdir,
        "membership.png",
        [r[0] for r in rows],
        {"final residual": finals},
        xlabel="grid points per axis",
        ylabel="residual",
    )

    # Basis independence of the quadratic generator on the full plane.
    rep = grid_rep(d=1, m=min(256, max(config["m_list"])), half_width=config["half_width"])
    from .symplectic import full_subspace

    E2 = full_subspace(rep.ambient)
    d_std = laplacian_delta_e(rep, E2, basis=np.eye(2))
    c, s = np.cos(0.41), np.sin(0.41)
    d_rot = laplacian_delta_e(rep, E2, basis=np.array([[c, s], [-s, c]]))
    diff = float(np.linalg.norm(d_std - d_rot, 2))
    checks["basis_independence"] = {
        "difference": diff,
        "tolerance": config["basis_tolerance"],
        "passed": bool(diff < config["basis_tolerance"]),
    }
    return {"checks": checks}


# ---------------------------------------------------------------------------
# Driver


COMMANDS = {
    "ccr-check": (CCR_SCHEMA, cmd_ccr_check),
    "grading": (GRADING_SCHEMA, cmd_grading),
    "hvz": (HVZ_SCHEMA, cmd_hvz),
    "demo2d": (DEMO2D_SCHEMA, cmd_demo2d),
    "aniso": (ANISO_SCHEMA, cmd_aniso),
    "membership": (MEMBERSHIP_SCHEMA, cmd_membership),
}

MODULE_TOLERANCES = {
    "subspace_rank": 1e-10,
    "subspace_equality": 1e-9,
    "atom_merge": 1e-12,
    "unitarity": 1e-12,
    "limit_step": 1e-3,
    "limit_classify": 5e-3,
}


def _apply_thread_env():
    threads = os.environ.get("FIELDALG_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def run_command(name: str, config_path: str | None) -> int:
    schema, impl = COMMANDS[name]
    config = resolve_config(schema, config_path)
    from .reporting import config_hash, write_report

    text = _config_lines(config)
    payload = impl(config)
    checks = payload["checks"]
    passed = all(entry.get("passed", False) for entry in checks.values())
    report = {
        "command": name,
        "config": config,
        "config_hash": config_hash(text),
        "module_tolerances": MODULE_TOLERANCES,
        "checks": checks,
        "passed": passed,
    }
    write_report(config["output_dir"], report)
    return 0 if passed else 1


def main(argv=None) -> int:
    _apply_thread_env()
    parser = argparse.ArgumentParser(
        prog="fieldalg",
        description="Structural checks for the field algebra of a symplectic space",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument(
            "config",
            nargs="?",
            default=None,
            help="key = value configuration file (defaults apply when omitted)",
        )
    args = parser.parse_args(argv)
    try:
        return run_command(args.command, args.config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        import traceback

        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
