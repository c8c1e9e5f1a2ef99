"""Per-case pipeline orchestration and batch processing.

Stages: landmarks -> inputs -> midplane -> pose -> slab -> mask2mesh ->
thickness -> subseg -> render. Each stage's outputs are written (atomically,
write-temp-then-rename) as soon as the stage completes; ``status.json``
records per-stage timings and errors. A failing stage skips the rest of its
case; batch mode continues with the next case.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fem, svgfig
from .config import RunConfig
from .contour import Mask2D, extract_contour, smooth_mask
from .evalstats import GroupTable, dice, hausdorff95, ols_fit, thickness_group_map
from .midplane import midsagittal_plane, resample_slab
from .morphometry import (
    Landmarks2D,
    intercallosal_line,
    shape_summary,
    thickness_profile,
)
from .subseg import SubsegScheme, subsegment
from .transforms import Landmarks, Plane, acpc_standardize
from .triangulate import triangulate
from .volume import Volume, load_volume

__all__ = [
    "CaseSpec",
    "run_case",
    "run_eval",
    "run_stats",
    "run_batch",
    "write_atomic",
    "InputError",
]


class InputError(ValueError):
    """Invalid or missing user input (maps to exit code 2)."""


@dataclass(frozen=True)
class CaseSpec:
    """One case: a label volume, AC/PC landmarks, optionally a known plane."""

    case_id: str
    labels: str
    landmarks: str
    plane: str = ""
    t1: str = ""
    out: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> "CaseSpec":
        try:
            return cls(
                case_id=str(d["id"]),
                labels=str(d["labels"]),
                landmarks=str(d["landmarks"]),
                plane=str(d.get("plane", "")),
                t1=str(d.get("t1", "")),
                out=str(d.get("out", "")),
            )
        except KeyError as e:
            raise InputError(f"case spec missing required key {e}") from None


def write_atomic(path, data) -> None:
    """Write bytes/str to path via a temp file and atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode) as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def plane_frame(slab: Volume):
    """(e1, e2, origin_mid) of the slab's central slice in world space."""
    A = slab.affine
    sp1 = np.linalg.norm(A[:3, 0])
    sp2 = np.linalg.norm(A[:3, 1])
    e1 = A[:3, 0] / sp1
    e2 = A[:3, 1] / sp2
    mid = slab.dims[2] // 2
    origin_mid = A[:3, 3] + A[:3, 2] * mid
    return e1, e2, origin_mid


def project_to_plane(points, e1, e2, origin) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float)) - origin
    return np.column_stack([pts @ e1, pts @ e2])


def _load_landmarks(path) -> Landmarks:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return Landmarks.from_json(f.read())
    except FileNotFoundError:
        raise InputError(f"landmark file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise InputError(f"invalid landmark file {path}: {e}") from None


def _load_plane(path) -> Plane:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return Plane.from_json(f.read())
    except FileNotFoundError:
        raise InputError(f"plane file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise InputError(f"invalid plane file {path}: {e}") from None


def run_case(case: CaseSpec, cfg: RunConfig, out_dir=None) -> dict:
    """Run the full geometry pipeline for one case.

    Returns the status dict that is also written to ``status.json``:
    ``{"case": id, "ok": bool, "stages": [{name, status, seconds, error?}]}``.
    """
    out = Path(out_dir if out_dir is not None else (case.out or case.case_id))
    out.mkdir(parents=True, exist_ok=True)
    write_atomic(out / "config.txt", cfg.to_text())

    status = {"case": case.case_id, "ok": True, "stages": []}
    state = {}

    def stage(name, fn):
        if not status["ok"]:
            status["stages"].append({"name": name, "status": "skipped", "seconds": 0.0})
            return
        t0 = time.perf_counter()
        try:
            fn()
            status["stages"].append(
                {"name": name, "status": "ok", "seconds": round(time.perf_counter() - t0, 4)}
            )
        except Exception as e:  # noqa: BLE001 - per-stage error capture is the contract
            status["ok"] = False
            status["error_kind"] = (
                "input" if isinstance(e, (InputError, FileNotFoundError)) else "internal"
            )
            status["stages"].append(
                {
                    "name": name,
                    "status": "failed",
                    "seconds": round(time.perf_counter() - t0, 4),
                    "error": f"{type(e).__name__}: {e}",
                }
            )
        # keep the on-disk record current at every stage boundary; the
        # atomic replace means a crash never leaves truncated JSON
        write_atomic(out / "status.json", _json_dumps(status))

    def s_landmarks():
        state["lm3"] = _load_landmarks(case.landmarks)

    def s_inputs():
        try:
            state["vol"] = load_volume(case.labels)
        except FileNotFoundError:
            raise InputError(f"label volume not found: {case.labels}") from None
        if not state["vol"].is_label_map():
            raise InputError("labels volume must be an integer label map")

    def s_midplane():
        vol = state["vol"]
        if case.plane:
            plane = _load_plane(case.plane)
        elif cfg.template_seg and cfg.template_plane:
            template = load_volume(cfg.template_seg)
            tplane = _load_plane(cfg.template_plane)
            plane, transform = midsagittal_plane(vol, template, tplane)
            write_atomic(out / "transform.json", transform.to_json() + "\n")
        else:
            raise InputError("no plane given and no template configured")
        state["plane"] = plane
        write_atomic(out / "plane.json", plane.to_json() + "\n")

    def s_pose():
        vol = state["vol"]
        mask = np.isin(vol.data, cfg.cc_labels)
        if not mask.any():
            raise InputError(f"no CC labels {cfg.cc_labels} present in {case.labels}")
        centroid = vol.voxel_to_world(np.argwhere(mask)).mean(axis=0)
        pose = acpc_standardize(state["lm3"], centroid)
        write_atomic(out / "pose.json", pose.to_json() + "\n")

    def s_slab():
        vol = state["vol"]
        finest = float(np.min(vol.voxel_size))
        spacing = cfg.slab_spacing_mm or finest
        slab = resample_slab(
            vol, state["plane"], cfg.slab_width_mm, spacing, inplane_spacing_mm=finest
        )
        state["slab"] = slab
        state["spacing"] = spacing
        cc = np.isin(slab.data, cfg.cc_labels)
        if not cc.any():
            raise InputError("no CC voxels found in the mid-sagittal slab")
        px = float(slab.voxel_size[0])
        state["slab_areas"] = cc.sum(axis=(0, 1)).astype(float) * px * px
        mid = slab.dims[2] // 2
        state["mask"] = Mask2D(cc[:, :, mid].astype(np.uint8), (px, px))
        e1, e2, origin = plane_frame(slab)
        lm3 = state["lm3"]
        state["lm2"] = Landmarks2D(
            project_to_plane(lm3.ac, e1, e2, origin)[0],
            project_to_plane(lm3.pc, e1, e2, origin)[0],
        )

    def s_mask2mesh():
        mask = state["mask"]
        px = mask.pixel_size[0]
        field = smooth_mask(mask, cfg.sigma_vox * px)
        padded = np.pad(field, 1)
        contour = extract_contour(
            padded, cfg.iso, pixel_size=mask.pixel_size, origin=(-px, -px)
        )
        state["contour"] = contour
        write_atomic(out / "contour.csv", contour.to_csv())
        state["mesh"] = triangulate(contour, cfg.max_area_mm2, cfg.min_angle_deg)
        write_atomic(out / "mesh.off", state["mesh"].to_off())

    def s_thickness():
        mesh = state["mesh"]
        line, f = intercallosal_line(mesh, state["lm2"], cfg.n_samples)
        state["line"], state["laplace"] = line, f
        write_atomic(out / "line.csv", line.to_csv())
        write_atomic(out / "laplace.csv", fem.field_to_csv(f))
        profile = thickness_profile(mesh, f, line, cfg.n_samples)
        state["profile"] = profile
        write_atomic(out / "profile.csv", profile.to_csv())
        summary = shape_summary(
            mesh,
            state["contour"],
            line,
            state["slab_areas"],
            state["spacing"],
            cfg.slab_width_mm,
        )
        state["summary"] = summary
        d = summary.to_dict()
        d["n_valid_thickness"] = int(profile.valid.sum())
        d["mean_thickness_mm"] = (
            float(np.nanmean(profile.thickness_mm[profile.valid]))
            if profile.valid.any()
            else float("nan")
        )
        write_atomic(out / "summary.json", _json_dumps(d))

    def s_subseg():
        mesh = state["mesh"]
        rows = ["scheme,segment_id,area_mm2"]
        labels_csv = ["scheme,triangle,segment_id"]
        for kind in cfg.schemes:
            scheme = (
                SubsegScheme(kind, fractions=tuple(cfg.fractions))
                if cfg.fractions and kind not in ("hampel", "eigendirection")
                else SubsegScheme(kind)
            )
            res = subsegment(mesh, scheme, state["lm2"], state.get("line"))
            state.setdefault("subseg", {})[kind] = res
            for k, a in enumerate(res.segment_areas_mm2):
                rows.append(f"{kind},{k},{float(a)!r}")
            for t, lab in enumerate(res.triangle_labels):
                labels_csv.append(f"{kind},{t},{int(lab)}")
        write_atomic(out / "subseg.csv", "\n".join(rows) + "\n")
        write_atomic(out / "subseg_labels.csv", "\n".join(labels_csv) + "\n")

    def s_render():
        if not cfg.write_svg:
            return
        profile = state["profile"]
        write_atomic(
            out / "profile.svg",
            svgfig.profile_svg(profile.positions, profile.thickness_mm),
        )
        write_atomic(
            out / "shape.svg",
            svgfig.shape_svg(state["contour"].points, state["line"].points),
        )
        sub = state.get("subseg", {})
        if sub:
            kind = cfg.schemes[0]
            res = sub[kind]
            mesh = state["mesh"]
            write_atomic(
                out / "subseg.svg",
                svgfig.subseg_svg(mesh.vertices, mesh.triangles, res.triangle_labels),
            )

    stage("landmarks", s_landmarks)
    stage("inputs", s_inputs)
    stage("midplane", s_midplane)
    stage("pose", s_pose)
    stage("slab", s_slab)
    stage("mask2mesh", s_mask2mesh)
    stage("thickness", s_thickness)
    stage("subseg", s_subseg)
    stage("render", s_render)

    write_atomic(out / "status.json", _json_dumps(status))
    return status


def run_eval(pred_path, ref_path) -> dict:
    """DSC and HD95 between two label/binary volumes."""
    try:
        pred = load_volume(pred_path)
        ref = load_volume(ref_path)
    except FileNotFoundError as e:
        raise InputError(str(e)) from None
    if pred.dims != ref.dims:
        raise InputError(f"mask shapes differ: {pred.dims} vs {ref.dims}")
    mp = pred.data > 0
    mr = ref.data > 0
    return {
        "dice": dice(mp, mr),
        "hd95_mm": hausdorff95(mp, mr, voxel_size=pred.voxel_size),
    }


def _read_profile_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        if header[:2] != ["position_fraction", "thickness_mm"]:
            raise InputError(f"unexpected profile header in {path}")
        for line in f:
            _, t = line.strip().split(",")
            rows.append(float(t))
    return np.array(rows)


_SEX_CODES = {"0": 0.0, "1": 1.0, "m": 0.0, "male": 0.0, "f": 1.0, "female": 1.0}
_GROUP_CODES = {"0": 0.0, "1": 1.0, "control": 0.0, "patient": 1.0}


def read_group_table(table_path, profiles_dir) -> tuple:
    """Read the group CSV and per-case profile CSVs.

    The table needs columns case_id, group (patient/control or 1/0), age,
    sex (female=1, male=0), tbv. Profiles are read from
    ``profiles_dir/<case_id>/profile.csv``.
    """
    import csv

    ids = []
    group = []
    age = []
    sex = []
    tbv = []
    thickness = []
    with open(table_path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        needed = {"case_id", "group", "age", "sex", "tbv"}
        if reader.fieldnames is None or not needed.issubset(set(reader.fieldnames)):
            raise InputError(f"group table must have columns {sorted(needed)}")
        for row in reader:
            cid = row["case_id"].strip()
            prof = Path(profiles_dir) / cid / "profile.csv"
            if not prof.exists():
                raise InputError(f"profile not found for case {cid}: {prof}")
            g = _GROUP_CODES.get(row["group"].strip().lower())
            s = _SEX_CODES.get(row["sex"].strip().lower())
            if g is None:
                raise InputError(f"unknown group value {row['group']!r} for case {cid}")
            if s is None:
                raise InputError(f"unknown sex value {row['sex']!r} for case {cid}")
            ids.append(cid)
            group.append(g)
            sex.append(s)
            age.append(float(row["age"]))
            tbv.append(float(row["tbv"]))
            thickness.append(_read_profile_csv(prof))
    if not ids:
        raise InputError("insufficient data: empty group table")
    lens = {len(t) for t in thickness}
    if len(lens) != 1:
        raise InputError(f"profiles have inconsistent lengths: {sorted(lens)}")
    g = np.array(group)
    if (g == 1).sum() < 2 or (g == 0).sum() < 2:
        raise InputError("insufficient data: need at least 2 cases per group")
    table = GroupTable(ids, g, np.array(age), np.array(sex), np.array(tbv), np.vstack(thickness))
    return table


def run_stats(table_path, profiles_dir, out_dir, summaries_dir=None) -> dict:
    """Group comparison: per-position thickness map and per-measure effects.

    Writes ``stats.csv`` (position, beta, p, p_adj), ``pmap.svg``, and, when
    per-case ``summary.json`` files are available, ``measure_stats.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = read_group_table(table_path, profiles_dir)
    stats = thickness_group_map(table)

    lines = ["# sex encoding: male=0, female=1; group encoding: control=0, patient=1"]
    lines.append("position,beta,p,p_adj")
    for s in stats:
        lines.append(f"{s.position},{float(s.beta)!r},{float(s.p)!r},{float(s.p_adj)!r}")
    write_atomic(out / "stats.csv", "\n".join(lines) + "\n")

    with np.errstate(all="ignore"):
        mean_th = np.nanmean(table.thickness, axis=0)
    positions = (np.arange(table.n_positions) + 1) / (table.n_positions + 1)
    mean_len = 70.0
    sums = _read_summaries(table, profiles_dir if summaries_dir is None else summaries_dir)
    if sums is not None and "length_mm" in sums:
        mean_len = float(np.mean(sums["length_mm"]))
    write_atomic(
        out / "pmap.svg",
        svgfig.pmap_svg(positions, [s.p_adj for s in stats], mean_th, mean_len),
    )

    result = {
        "n_cases": len(table.case_ids),
        "n_positions": table.n_positions,
        "n_significant_adj": int(sum(1 for s in stats if s.p_adj < 0.05)),
    }
    if sums is not None:
        X = np.column_stack(
            [np.ones(len(table.group)), table.group, table.age, table.sex, table.tbv]
        )
        rows = ["# sex encoding: male=0, female=1; group encoding: control=0, patient=1"]
        rows.append("measure,beta,p")
        measures = {}
        for name, vals in sorted(sums.items()):
            ok = np.isfinite(vals)
            if ok.sum() < 6:
                continue
            fit = ols_fit(vals[ok], X[ok])
            rows.append(f"{name},{float(fit.beta[1])!r},{float(fit.p_value[1])!r}")
            measures[name] = {"beta": float(fit.beta[1]), "p": float(fit.p_value[1])}
        write_atomic(out / "measure_stats.csv", "\n".join(rows) + "\n")
        write_atomic(out / "measure_stats.json", _json_dumps(measures))
        result["measures"] = measures
    write_atomic(out / "stats_summary.json", _json_dumps(result))
    return result


def _read_summaries(table: GroupTable, summaries_dir):
    sums = {}
    for cid in table.case_ids:
        p = Path(summaries_dir) / cid / "summary.json"
        if not p.exists():
            return None
        with open(p, "r", encoding="utf-8") as f:
            d = json.load(f)
        for k, v in d.items():
            if isinstance(v, (int, float)):
                sums.setdefault(k, []).append(float(v))
    return {k: np.array(v) for k, v in sums.items() if len(v) == len(table.case_ids)}


def _run_case_star(args):
    case, cfg, out = args
    return run_case(case, cfg, out)


def run_batch(cases, cfg: RunConfig, out_root) -> list:
    """Run many cases, optionally with a process pool; outputs are case-local."""
    out_root = Path(out_root)
    jobs = [(case, cfg, out_root / case.case_id) for case in cases]
    threads = int(os.environ.get("CCMORPH_THREADS", cfg.threads))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(_run_case_star, jobs))
    return [_run_case_star(j) for j in jobs]
