"""Scenario loading, execution and comparison.

A scenario is one YAML mapping that names the angular profile, the methods to
run (proposed and conventional), the N_UE sweep and the artifact options.  The
shipped ``paper_baseline`` file carries the reference values; anything omitted
falls back to the same defaults the library modules use.

Scenario points (method x N_UE) are independent of each other: every point
writes only into its own directory, so the sequential loop below could be
replaced by any work pool without coordination.  The expensive objects that
points share (profile quadrature, mode fields, the optimizer runs, the greedy
chains) are computed once up front and treated as read-only.

All artifacts are plain CSV/JSON, written with round-trip float formatting and
fixed key order and without timestamps, so a rerun of the same scenario on the
same build produces byte-identical files.
"""

import json
import os
from pathlib import Path

import numpy as np
import yaml

from . import __version__, capacity, conventional, correlation, optimizer
from . import profiles, surfaces
from .modes import ModeSet, far_field_matrix
from .profiles import JointProfile, ProfileParams, make_grid

SURFACE_NAMES = ("plane", "one_32_sphere", "hemisphere")
DB_FLOOR = 1e-20          # pattern power floor before 10*log10
_EVAL_CHUNK = 2048        # directions per far-field evaluation block


class ScenarioError(ValueError):
    """Configuration problem, anchored to the file and key that caused it."""


# ---------------------------------------------------------------------------
# configuration tree
# ---------------------------------------------------------------------------

def _require_mapping(node, where):
    if not isinstance(node, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    return dict(node)


def _reject_unknown(node, where, allowed):
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise ScenarioError(
            f"{where}: unknown key '{unknown[0]}' "
            f"(allowed: {', '.join(sorted(allowed))})")


def _number(node, where, default, minimum=None):
    value = node if node is not None else default
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ScenarioError(f"{where}: expected a number")
    value = float(value)
    if minimum is not None and value <= minimum:
        raise ScenarioError(f"{where}: must be > {minimum}")
    return value


def _integer(node, where, default, minimum=1):
    value = node if node is not None else default
    if not isinstance(value, int) or isinstance(value, bool):
        raise ScenarioError(f"{where}: expected an integer")
    if value < minimum:
        raise ScenarioError(f"{where}: must be >= {minimum}")
    return value


def parse_method(spec, where="methods"):
    """One method string -> descriptor dict with a filesystem-safe label.

    Accepted forms: ``obpb:<optimal|plane|one_32_sphere|hemisphere>``,
    ``full_array:<power|det>`` and ``sub_array[:<power|det>]``.
    """
    if not isinstance(spec, str):
        raise ScenarioError(f"{where}: method entries are strings")
    kind, _, arg = spec.partition(":")
    kind = kind.strip()
    arg = arg.strip()
    if kind == "obpb":
        surface = arg or "optimal"
        if surface != "optimal" and surface not in SURFACE_NAMES:
            raise ScenarioError(
                f"{where}: unknown surface '{surface}' (optimal, "
                + ", ".join(SURFACE_NAMES) + ")")
        return {"kind": "obpb", "surface": surface,
                "label": f"obpb_{surface}"}
    if kind == "full_array":
        metric = {"power": "power", "det": "determinant",
                  "determinant": "determinant"}.get(arg or "power")
        if metric is None:
            raise ScenarioError(f"{where}: full_array metric is "
                                f"'power' or 'det', got '{arg}'")
        return {"kind": "full_array", "metric": metric,
                "label": "full_array_" + ("det" if metric == "determinant"
                                          else "power")}
    if kind == "sub_array":
        metric = {"": "power", "power": "power", "det": "determinant",
                  "determinant": "determinant"}.get(arg)
        if metric is None:
            raise ScenarioError(f"{where}: sub_array metric is "
                                f"'power' or 'det', got '{arg}'")
        return {"kind": "sub_array", "metric": metric, "label": "sub_array"}
    raise ScenarioError(f"{where}: unknown method kind '{kind}' "
                        "(obpb, full_array, sub_array)")


class Scenario:
    """A validated scenario tree; every field resolved to its final value."""

    _TOP_KEYS = ("name", "output_dir", "methods", "n_ue", "snr_db_siso",
                 "report_m", "profile", "quadrature", "antenna", "obpb",
                 "surfaces", "conventional", "artifacts")

    def __init__(self, tree, source="<scenario>"):
        where = source
        tree = _require_mapping(tree, where)
        _reject_unknown(tree, where, self._TOP_KEYS)
        self.source = source

        name = tree.get("name", Path(source).stem or "scenario")
        if not isinstance(name, str) or not name:
            raise ScenarioError(f"{where}: name: expected a non-empty string")
        self.name = name
        out = tree.get("output_dir", self.name)
        if not isinstance(out, str) or not out:
            raise ScenarioError(f"{where}: output_dir: expected a path string")
        self.output_dir = out

        methods = tree.get("methods")
        if not isinstance(methods, list) or not methods:
            raise ScenarioError(f"{where}: methods: expected a non-empty list")
        self.methods = [parse_method(spec, f"{where}: methods[{i}]")
                        for i, spec in enumerate(methods)]
        labels = [m["label"] for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ScenarioError(f"{where}: methods: duplicate method entries")

        n_ue = tree.get("n_ue")
        if not isinstance(n_ue, list) or not n_ue:
            raise ScenarioError(f"{where}: n_ue: expected a non-empty list")
        self.n_ue = [_integer(v, f"{where}: n_ue[{i}]", None)
                     for i, v in enumerate(n_ue)]

        self.snr_db_siso = _number(tree.get("snr_db_siso"),
                                   f"{where}: snr_db_siso", -12.0)
        report_m = tree.get("report_m")
        self.report_m = (None if report_m is None else
                         _integer(report_m, f"{where}: report_m", None))

        prof = _require_mapping(tree.get("profile", {}), f"{where}: profile")
        _reject_unknown(prof, f"{where}: profile",
                        ("mean_bs", "mean_ue", "sigma", "corr",
                         "polarization"))
        base = profiles.baseline_params()
        try:
            self.profile_params = ProfileParams(
                mean_bs=prof.get("mean_bs", base.mean_bs),
                mean_ue=prof.get("mean_ue", base.mean_ue),
                sigma=prof.get("sigma", base.sigma),
                corr=prof.get("corr", base.corr),
                polarization=prof.get("polarization", base.polarization),
            )
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ScenarioError(f"{where}: profile: {exc}") from None

        quad = _require_mapping(tree.get("quadrature", {}),
                                f"{where}: quadrature")
        _reject_unknown(quad, f"{where}: quadrature", ("bs", "ue"))
        self.quadrature = {}
        for side, default in (("bs", profiles.BS_GRID),
                              ("ue", profiles.UE_GRID)):
            pair = quad.get(side, list(default))
            if (not isinstance(pair, list) or len(pair) != 2):
                raise ScenarioError(f"{where}: quadrature: {side}: expected "
                                    "[n_theta, n_phi]")
            self.quadrature[side] = (
                _integer(pair[0], f"{where}: quadrature: {side}[0]", None, 2),
                _integer(pair[1], f"{where}: quadrature: {side}[1]", None, 2))

        ant = _require_mapping(tree.get("antenna", {}), f"{where}: antenna")
        _reject_unknown(ant, f"{where}: antenna",
                        ("bs_aperture_side", "ue_aperture_side"))
        self.bs_aperture_side = _number(ant.get("bs_aperture_side"),
                                        f"{where}: antenna: bs_aperture_side",
                                        4.0, 0.0)
        self.ue_aperture_side = _number(ant.get("ue_aperture_side"),
                                        f"{where}: antenna: ue_aperture_side",
                                        1.0, 0.0)

        ob = _require_mapping(tree.get("obpb", {}), f"{where}: obpb")
        _reject_unknown(ob, f"{where}: obpb",
                        ("epsilon", "max_iterations", "m_max"))
        self.obpb_config = optimizer.ObpbConfig(
            epsilon=_number(ob.get("epsilon"), f"{where}: obpb: epsilon",
                            0.01, 0.0),
            max_iterations=_integer(ob.get("max_iterations"),
                                    f"{where}: obpb: max_iterations", 200))
        self.obpb_m_max = _integer(ob.get("m_max"), f"{where}: obpb: m_max",
                                   12)

        sur = _require_mapping(tree.get("surfaces", {}), f"{where}: surfaces")
        _reject_unknown(sur, f"{where}: surfaces", ("density", "rank_rtol"))
        self.surface_density = _number(sur.get("density"),
                                       f"{where}: surfaces: density", 4.0,
                                       0.0)
        self.surface_rtol = _number(sur.get("rank_rtol"),
                                    f"{where}: surfaces: rank_rtol",
                                    surfaces.RANK_RTOL, 0.0)

        conv = _require_mapping(tree.get("conventional", {}),
                                f"{where}: conventional")
        _reject_unknown(conv, f"{where}: conventional",
                        ("n_v", "n_h", "spacing", "beam_interval"))
        self.array_config = conventional.ArrayConfig(
            n_v=_integer(conv.get("n_v"), f"{where}: conventional: n_v", 8),
            n_h=_integer(conv.get("n_h"), f"{where}: conventional: n_h", 8),
            spacing=_number(conv.get("spacing"),
                            f"{where}: conventional: spacing", 0.5, 0.0),
            beam_interval=_integer(conv.get("beam_interval"),
                                   f"{where}: conventional: beam_interval",
                                   4))

        art = _require_mapping(tree.get("artifacts", {}),
                               f"{where}: artifacts")
        _reject_unknown(art, f"{where}: artifacts",
                        ("cut_step_deg", "grid_step_deg"))
        self.cut_step_deg = _number(art.get("cut_step_deg"),
                                    f"{where}: artifacts: cut_step_deg",
                                    1.0, 0.0)
        self.grid_step_deg = _number(art.get("grid_step_deg"),
                                     f"{where}: artifacts: grid_step_deg",
                                     3.0, 0.0)

    # -- derived geometry ---------------------------------------------------

    @property
    def bs_radius(self):
        """Enclosing-sphere radius of the BS aperture (half its diagonal)."""
        return self.bs_aperture_side / np.sqrt(2.0)

    @property
    def ue_radius(self):
        return self.ue_aperture_side / np.sqrt(2.0)

    def needs_obpb(self):
        return any(m["kind"] == "obpb" for m in self.methods)

    def needs_conventional(self):
        return any(m["kind"] != "obpb" for m in self.methods)

    def resolved_output_dir(self):
        """Output directory after the OBPB_OUTPUT_ROOT override.

        Absolute paths pass through; relative ones are rooted under the
        environment variable when it is set, under the working directory
        otherwise.
        """
        out = Path(self.output_dir)
        if out.is_absolute():
            return out
        root = os.environ.get("OBPB_OUTPUT_ROOT")
        return (Path(root) / out) if root else out


def load_scenario(path):
    """Parse and validate a scenario file; raise ScenarioError otherwise."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror or exc}") from None
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioError(f"{where}: {problem}") from None
    return Scenario(tree, source=str(path))


# ---------------------------------------------------------------------------
# deterministic formatting
# ---------------------------------------------------------------------------

def _fmt(value):
    """Shortest round-trip decimal form of one scalar."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _jsonify(obj):
    """Numpy-free copy of a nested structure, ready for json.dumps."""
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    return obj


def _write_text(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) if not isinstance(v, str) else v
                          for v in row) for row in rows)
    _write_text(path, "\n".join(lines) + "\n")


def _write_json(path, obj):
    _write_text(path, json.dumps(_jsonify(obj), indent=2, sort_keys=True)
                + "\n")


# ---------------------------------------------------------------------------
# pattern evaluation
# ---------------------------------------------------------------------------

def _power_db(power):
    return 10.0 * np.log10(np.maximum(power, DB_FLOOR))


def _mode_pattern_db(q, modeset, theta, phi):
    """Per-stream radiated power in dB over a list of directions.

    Both polarization components contribute; evaluation is chunked so the
    (J x nodes) far-field blocks stay small.
    """
    q = np.atleast_2d(np.asarray(q).T).T
    out = np.empty((q.shape[1], theta.size))
    for lo in range(0, theta.size, _EVAL_CHUNK):
        sl = slice(lo, min(lo + _EVAL_CHUNK, theta.size))
        kth, kph = far_field_matrix(modeset, theta[sl], phi[sl])
        out[:, sl] = (np.abs(q.T @ kth) ** 2 + np.abs(q.T @ kph) ** 2)
    return _power_db(out)


def _element_pattern_db(weights, config, theta, phi):
    """Per-stream array pattern in dB (element envelope times array factor)."""
    a = conventional.steering_matrix(config, theta, phi)
    g = np.atleast_2d(np.asarray(weights).T) @ a
    return _power_db(np.abs(g) ** 2)


def _cut_directions(step_deg):
    """(phi-plane, theta-plane) cut angles and their (theta, phi) nodes.

    The phi-plane cut walks phi through the horizon (theta = 90 deg); the
    theta-plane cut walks the full xz great circle, parametrized by a signed
    angle whose magnitude is theta, positive on the phi = 0 half and negative
    on the phi = 180 half.
    """
    angles = np.arange(-180.0, 180.0 + 0.5 * step_deg, step_deg)
    deg = np.pi / 180.0
    phi_cut = (angles, np.full(angles.size, 0.5 * np.pi), angles * deg)
    theta_cut = (angles, np.abs(angles) * deg,
                 np.where(angles >= 0.0, 0.0, np.pi))
    return phi_cut, theta_cut


def _grid_directions(step_deg):
    theta = np.arange(0.0, 180.0 + 0.5 * step_deg, step_deg)
    phi = np.arange(-180.0, 180.0 + 0.5 * step_deg, step_deg)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    deg = np.pi / 180.0
    return tt.ravel(), pp.ravel(), tt.ravel() * deg, pp.ravel() * deg


def _stream_header(prefix, m):
    return [prefix] + [f"stream_{i + 1}_db" for i in range(m)]


def _write_pattern_artifacts(point_dir, scenario, pattern_db_of):
    """Write the cut and grid CSVs given a (tag, directions)->dB evaluator."""
    phi_cut, theta_cut = _cut_directions(scenario.cut_step_deg)
    for fname, tag, (angles, th, ph), label in (
            ("cut_phi_plane.csv", "cut_phi", phi_cut, "phi_deg"),
            ("cut_theta_plane.csv", "cut_theta", theta_cut, "angle_deg")):
        db = pattern_db_of(tag, np.asarray(th, dtype=float),
                           np.asarray(ph, dtype=float))
        rows = [[angles[i]] + list(db[:, i]) for i in range(angles.size)]
        _write_csv(point_dir / fname, _stream_header(label, db.shape[0]),
                   rows)
    tdeg, pdeg, th, ph = _grid_directions(scenario.grid_step_deg)
    db = pattern_db_of("grid", th, ph)
    rows = [[tdeg[i], pdeg[i]] + list(db[:, i]) for i in range(tdeg.size)]
    _write_csv(point_dir / "pattern_grid.csv",
               ["theta_deg", "phi_deg"] + _stream_header("", db.shape[0])[1:],
               rows)


def _write_correlation_csv(path, r_norm):
    rows = []
    m = r_norm.shape[0]
    for i in range(m):
        for j in range(m):
            v = r_norm[i, j]
            rows.append([i + 1, j + 1, v.real, v.imag, abs(v)])
    _write_csv(path, ["i", "j", "re", "im", "abs"], rows)


# ---------------------------------------------------------------------------
# the runner
# ---------------------------------------------------------------------------

class RunOutcome:
    """What `run_scenario` produced: exit code plus artifact locations."""

    def __init__(self, exit_code, output_dir, manifest_path, points):
        self.exit_code = exit_code
        self.output_dir = output_dir
        self.manifest_path = manifest_path
        self.points = points


class _ObpbBundle:
    """Optimizer runs for every candidate M plus the surface projectors."""

    def __init__(self, scenario, profile):
        self.modes_bs = ModeSet(enclosing_radius=scenario.bs_radius)
        self.modes_ue = ModeSet(enclosing_radius=scenario.ue_radius)
        self.fields = (
            profiles.profile_fields(profile, "bs", self.modes_bs),
            profiles.profile_fields(profile, "ue", self.modes_ue))
        self.runs = {}
        for m in range(1, scenario.obpb_m_max + 1):
            self.runs[m] = optimizer.run(scenario.obpb_config, profile,
                                         self.modes_bs, self.modes_ue, m,
                                         fields=self.fields)
        self.ops = {}
        self.samplings = {}
        needed = {mm["surface"] for mm in scenario.methods
                  if mm["kind"] == "obpb" and mm["surface"] != "optimal"}
        for name in sorted(needed):
            surf = surfaces.named_surface(name, scenario.bs_radius)
            samp = surfaces.sample_surface(surf, scenario.surface_density)
            self.samplings[name] = samp
            self.ops[name] = surfaces.build_z(self.modes_bs, samp,
                                              rtol=scenario.surface_rtol)
        self._beam_cache = {}
        self._pattern_cache = {}

    def beams(self, surface, m):
        """BS beam coefficients for one family at stream count m."""
        key = (surface, m)
        if key not in self._beam_cache:
            q = self.runs[m].q_bs
            if surface != "optimal":
                q, _ = surfaces.project(self.ops[surface], q)
            self._beam_cache[key] = q
        return self._beam_cache[key]

    def pattern_db(self, surface, m, tag, theta, phi):
        """Cached per-stream dB patterns (nothing here depends on N_UE)."""
        key = (surface, m, tag)
        if key not in self._pattern_cache:
            modeset = self.modes_ue if tag.endswith("_ue") else self.modes_bs
            q = (self.runs[m].q_ue if tag.endswith("_ue")
                 else self.beams(surface, m))
            self._pattern_cache[key] = _mode_pattern_db(q, modeset, theta,
                                                        phi)
        return self._pattern_cache[key]

    def family(self, surface):
        def r_of_m(m):
            return correlation.beam_correlation(self.beams(surface, m),
                                                self.runs[m].r_bs)
        return r_of_m

    @property
    def converged(self):
        return all(r.converged for r in self.runs.values())

    def histories(self):
        return {m: {"objective_history": list(r.objective_history),
                    "converged": bool(r.converged),
                    "iterations": int(r.iterations)}
                for m, r in self.runs.items()}


class _ConventionalBundle:
    """Element correlation at N_UE = 1 plus the full-array greedy chains.

    Selection is independent of N_UE because the element correlation scales
    linearly with it, so the chains are built once at the deepest stream
    count the sweep can reach.
    """

    def __init__(self, scenario, profile, snr):
        self.config = scenario.array_config
        self.r_unit = conventional.element_correlation(profile, self.config)
        self.snr = snr
        depth = min(self.config.n_elements, max(scenario.n_ue))
        self.full = {}
        for metric in {mm["metric"] for mm in scenario.methods
                       if mm["kind"] == "full_array"}:
            self.full[metric] = conventional.full_array_selection(
                self.r_unit, self.config, depth, metric)
        self.sub_metric = next((mm["metric"] for mm in scenario.methods
                                if mm["kind"] == "sub_array"), "power")
        self._sub_cache = {}

    def sub_winner(self, n_ue):
        if n_ue not in self._sub_cache:
            self._sub_cache[n_ue] = conventional.best_subarray_partition(
                float(n_ue) * self.r_unit, self.config, n_ue, self.snr,
                metric=self.sub_metric)
        return self._sub_cache[n_ue]


def _point_record(method, n_ue, report, det_report, report_m, extra):
    rec = {"method": method["label"], "n_ue": int(n_ue),
           "m_opt": int(report.m_opt), "capacity_bits": float(report.total),
           "det_db": float(det_report), "report_m": int(report_m)}
    rec.update(extra)
    return rec


def run_scenario(scenario, echo=None):
    """Execute every scenario point and write the artifact tree.

    Returns a RunOutcome whose exit code is 0 on success and 2 when any
    optimizer run failed to converge (artifacts are still written, flagged
    with converged=false).  Configuration problems raise ScenarioError
    before anything is written.
    """
    if isinstance(scenario, (str, Path)):
        scenario = load_scenario(scenario)
    say = echo if echo is not None else (lambda msg: None)

    out_dir = scenario.resolved_output_dir()
    profile = JointProfile(scenario.profile_params,
                           make_grid(*scenario.quadrature["bs"]),
                           make_grid(*scenario.quadrature["ue"]))
    snr = correlation.calibrated_snr(profile, scenario.snr_db_siso)
    say(f"profile on {scenario.quadrature['bs']} x "
        f"{scenario.quadrature['ue']} grids, snr = {snr:.6g}")

    obpb_bundle = None
    if scenario.needs_obpb():
        obpb_bundle = _ObpbBundle(scenario, profile)
        say(f"optimizer: {scenario.obpb_m_max} stream counts, converged="
            f"{obpb_bundle.converged}; surface ranks "
            + str({k: op.rank for k, op in obpb_bundle.ops.items()}))
    conv_bundle = None
    if scenario.needs_conventional():
        conv_bundle = _ConventionalBundle(scenario, profile, snr)
        say("conventional chains ready "
            f"(codebook {conv_bundle.config.n_beams} beams)")

    points = []
    for method in scenario.methods:
        for n_ue in scenario.n_ue:
            rec = _run_point(scenario, method, n_ue, out_dir, snr,
                             obpb_bundle, conv_bundle)
            points.append(rec)
            say(f"{method['label']} N_UE={n_ue}: M_opt={rec['m_opt']} "
                f"C={rec['capacity_bits']:.3f} det_db={rec['det_db']:.2f}")

    summary_rows = [[p["method"], p["n_ue"], p["m_opt"], p["capacity_bits"],
                     p["det_db"], p["report_m"],
                     "" if p.get("converged") is None
                     else ("true" if p["converged"] else "false"),
                     p.get("sub_shape_label", "")] for p in points]
    _write_csv(out_dir / "summary.csv",
               ["method", "n_ue", "m_opt", "capacity_bits", "det_db",
                "report_m", "converged", "sub_shape"], summary_rows)

    manifest = {
        "scenario_name": scenario.name,
        "source": str(scenario.source),
        "resolved": _resolved_parameters(scenario, profile, snr, obpb_bundle,
                                         conv_bundle),
        "points": points,
        "obpb_histories": (obpb_bundle.histories() if obpb_bundle else {}),
        "converged": obpb_bundle.converged if obpb_bundle else True,
        "summary_csv": "summary.csv",
    }
    manifest_path = out_dir / "manifest.json"
    _write_json(manifest_path, manifest)

    exit_code = 0 if manifest["converged"] else 2
    return RunOutcome(exit_code, out_dir, manifest_path, points)


def _run_point(scenario, method, n_ue, out_dir, snr, obpb_bundle,
               conv_bundle):
    point_dir = out_dir / method["label"] / f"n_ue_{n_ue}"
    extra = {"artifacts": str(point_dir.relative_to(out_dir))}

    if method["kind"] == "obpb":
        family = obpb_bundle.family(method["surface"])
        report = capacity.rank_adapt(family, scenario.obpb_m_max, snr)
        report_m = min(scenario.report_m or report.m_opt,
                       scenario.obpb_m_max)
        r_report = family(report_m)
        extra["converged"] = obpb_bundle.converged
        surface = method["surface"]

        def pattern_db_of(tag, theta, phi):
            return obpb_bundle.pattern_db(surface, report_m, tag, theta, phi)

        def ue_pattern_db_of(tag, theta, phi):
            return obpb_bundle.pattern_db(surface, report_m, tag + "_ue",
                                          theta, phi)
    else:
        m_cap = min(conv_bundle.config.n_elements, n_ue)
        if method["kind"] == "full_array":
            # chain built at N_UE = 1 (selection is scale-invariant); the
            # N_UE factor enters through the family only
            sel = conv_bundle.full[method["metric"]]
            scale = float(n_ue)
        else:
            # the partition winner must be chosen at the true scale, so its
            # selection already carries the N_UE factor
            shape, sel, sub_report = conv_bundle.sub_winner(n_ue)
            scale = 1.0
            m_cap = min(sel.m_max, n_ue)
            extra["sub_shape"] = list(shape)
            extra["sub_shape_label"] = f"{shape[0]}x{shape[1]}"

        def family(m):
            return scale * sel.beam_correlation(m)

        report = capacity.rank_adapt(family, m_cap, snr)
        report_m = min(scenario.report_m or report.m_opt, m_cap)
        beams = sel.beam_weights(report_m)
        r_report = family(report_m)
        extra["converged"] = None
        extra["selection_chain"] = [int(i) for i in sel.chain[:m_cap]]

        def pattern_db_of(tag, theta, phi):
            return _element_pattern_db(beams, conv_bundle.config, theta, phi)

        ue_pattern_db_of = None

    _write_pattern_artifacts(point_dir, scenario, pattern_db_of)
    if ue_pattern_db_of is not None:
        phi_cut, theta_cut = _cut_directions(scenario.cut_step_deg)
        for fname, tag, (angles, th, ph), label in (
                ("cut_phi_plane_ue.csv", "cut_phi", phi_cut, "phi_deg"),
                ("cut_theta_plane_ue.csv", "cut_theta", theta_cut,
                 "angle_deg")):
            db = ue_pattern_db_of(tag, np.asarray(th, dtype=float),
                                  np.asarray(ph, dtype=float))
            rows = [[angles[i]] + list(db[:, i])
                    for i in range(angles.size)]
            _write_csv(point_dir / fname,
                       _stream_header(label, db.shape[0]), rows)

    det_report = correlation.det_db(r_report)
    _write_correlation_csv(point_dir / "correlation.csv",
                           correlation.normalize_correlation(r_report))
    payload = {"method": method["label"], "n_ue": int(n_ue),
               "report_m": int(report_m), "det_db": float(det_report),
               "capacity": report.as_dict()}
    if "sub_shape" in extra:
        payload["sub_shape"] = extra["sub_shape"]
    _write_json(point_dir / "capacity.json", payload)

    return _point_record(method, n_ue, report, det_report, report_m, extra)


def _resolved_parameters(scenario, profile, snr, obpb_bundle, conv_bundle):
    """Every tunable the build exposes, at its value for this run."""
    params = scenario.profile_params
    resolved = {
        "package_version": __version__,
        "profile": {
            "mean_bs_deg": params.mean_bs, "mean_ue_deg": params.mean_ue,
            "sigma_deg": params.sigma, "corr": params.corr,
            "polarization": params.polarization,
            "quadrature_bs": list(scenario.quadrature["bs"]),
            "quadrature_ue": list(scenario.quadrature["ue"]),
            "normalization": profile.total_power,
        },
        "antenna": {
            "bs_aperture_side": scenario.bs_aperture_side,
            "ue_aperture_side": scenario.ue_aperture_side,
            "bs_radius": scenario.bs_radius,
            "ue_radius": scenario.ue_radius,
        },
        "capacity": {
            "snr_db_siso": scenario.snr_db_siso,
            "snr": snr,
            "siso_reference": correlation.siso_reference(profile),
            "eigenvalue_clamp_rel": capacity._CLAMP_REL,
            "tie_break_rel": capacity._TIE_REL,
        },
        "artifacts": {
            "cut_step_deg": scenario.cut_step_deg,
            "grid_step_deg": scenario.grid_step_deg,
            "report_m": scenario.report_m,
            "db_floor": DB_FLOOR,
        },
        "methods": [m["label"] for m in scenario.methods],
        "n_ue": scenario.n_ue,
    }
    if obpb_bundle is not None:
        resolved["modes"] = {
            "n_tr_bs": obpb_bundle.modes_bs.truncation_order,
            "n_tr_ue": obpb_bundle.modes_ue.truncation_order,
            "j_bs": obpb_bundle.modes_bs.mode_count,
            "j_ue": obpb_bundle.modes_ue.mode_count,
        }
        resolved["obpb"] = {
            "epsilon": scenario.obpb_config.epsilon,
            "max_iterations": scenario.obpb_config.max_iterations,
            "m_max": scenario.obpb_m_max,
            "seed_mode_smn": [2, 0, 1],
            "rank_adaptation": "re-run optimizer per candidate M",
        }
        resolved["surfaces"] = {
            "density_per_wavelength": scenario.surface_density,
            "rank_rtol": scenario.surface_rtol,
            "shapes": {
                name: {
                    "n_points": obpb_bundle.samplings[name].n_points,
                    "rank": op.rank,
                    "kind": obpb_bundle.samplings[name].surface.kind,
                } for name, op in obpb_bundle.ops.items()},
        }
    if conv_bundle is not None:
        cfg = conv_bundle.config
        resolved["conventional"] = {
            "n_v": cfg.n_v, "n_h": cfg.n_h, "spacing": cfg.spacing,
            "beam_interval": cfg.beam_interval,
            "codebook_beams": cfg.n_beams,
            "tie_break_rel": conventional._TIE_REL,
            "subarray_shapes": [list(s)
                                for s in conventional.SUBARRAY_SHAPES],
            "stream_cap": "min(groups or elements, n_ue)",
        }
    return resolved


# ---------------------------------------------------------------------------
# comparison across runs
# ---------------------------------------------------------------------------

def compare_manifests(paths, baseline=None):
    """Aligned comparison table across run manifests.

    Returns (header, rows).  Rows carry method, n_ue, m_opt, capacity,
    det_db, the capacity ratio against the baseline method at the same n_ue,
    and a warning column that flags manifests whose profile parameters
    disagree with the first manifest's.
    """
    if len(paths) < 2:
        raise ScenarioError("compare needs at least two manifest files")
    manifests = []
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                manifests.append((str(path), json.load(fh)))
        except OSError as exc:
            raise ScenarioError(f"{path}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}:{exc.lineno}: {exc.msg}") from None
    for path, man in manifests:
        if "points" not in man or "resolved" not in man:
            raise ScenarioError(f"{path}: not a run manifest "
                                "(missing points/resolved)")

    reference_profile = manifests[0][1]["resolved"]["profile"]
    if baseline is None:
        baseline = manifests[0][1]["points"][0]["method"]
    known = {p["method"] for _, man in manifests for p in man["points"]}
    if baseline not in known:
        raise ScenarioError(f"baseline method '{baseline}' not present in "
                            "any manifest (have: "
                            + ", ".join(sorted(known)) + ")")

    baseline_capacity = {}
    for _, man in manifests:
        for p in man["points"]:
            if p["method"] == baseline:
                baseline_capacity.setdefault(int(p["n_ue"]),
                                             float(p["capacity_bits"]))

    header = ["source", "method", "n_ue", "m_opt", "capacity_bits",
              "det_db", f"capacity_ratio_vs_{baseline}", "warning"]
    rows = []
    for path, man in manifests:
        warn = ("" if man["resolved"]["profile"] == reference_profile
                else "profile-mismatch")
        for p in man["points"]:
            base = baseline_capacity.get(int(p["n_ue"]))
            ratio = ("" if base is None or base == 0.0
                     else float(p["capacity_bits"]) / base)
            rows.append([Path(path).parent.name or str(path), p["method"],
                         int(p["n_ue"]), int(p["m_opt"]),
                         float(p["capacity_bits"]), float(p["det_db"]),
                         ratio, warn])
    return header, rows


def render_comparison_csv(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) if not isinstance(v, str) else v
                          for v in row) for row in rows)
    return "\n".join(lines) + "\n"
