import argparse
import colorsys
import hashlib
import json
import logging
import os
import sys

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator
from scipy.stats import spearmanr

from dotenv import load_dotenv
load_dotenv()


from splatcamo import __version__
from splatcamo.attack import (
    AttackPlan,
    DirectoryProvider,
    SceneProvider,
    ViewRegion,
    apply_attack,
    load_plan,
    membership,
    overlapping_regions,
    poison_synthetic,
    save_plan,
)
from splatcamo.detectors import DetectorKind, ExternalDetector, ToyDetector
from splatcamo.errors import ConfigError, SplatError, StructureError
from splatcamo.evaluation import Report, ground_truth_for, report_row, save_detections
from splatcamo.renderer import project_splats, render, render_set
from splatcamo.scene import (
    DatasetRole,
    Intrinsics,
    PosedImageSet,
    Splat,
    SplatCloud,
    load_cloud,
    load_dataset,
    read_manifest,
    save_cloud,
    save_dataset,
    save_png,
    MANIFEST_NAME,
    CameraPose,
)
from splatcamo.sh_color import SHOrder, eval_color, fit_sh
from splatcamo.synth import CaptureSpec, Face, Layout, SceneSpec, build_scene, make_views, view_direction
from splatcamo.textures import PALETTE, SKY
from splatcamo.trainer import TrainConfig, initialize_cloud, time_to_ssim, train


# ==========================================================
# Environment
# ==========================================================

OUTPUT_DIR = os.getenv("SPLATCAMO_OUTPUT_DIR", "runs")
THREADS = os.getenv("SPLATCAMO_THREADS")  # numba default when unset
LOG_LEVEL = os.getenv("SPLATCAMO_LOG_LEVEL", "INFO")
DETECTOR_CMD = os.getenv("SPLATCAMO_DETECTOR_CMD")  # optional

logger = logging.getLogger("splatcamo.cli")

SSIM_TARGET = 0.95


# ==========================================================
# Configuration models
# ==========================================================

class RegionConfig(BaseModel):
    appearance: str = Field(..., min_length=1, description="texture id revealed inside the region")
    azimuth_deg: float = Field(0.0, description="reference azimuth, from +z toward +x")
    elevation_deg: float = Field(90.0, ge=-90, le=90, description="reference elevation above the horizon")
    delta_deg: float = Field(30.0, gt=0, le=180, description="cone half-angle around the reference axis")
    faces: list[Face] | None = Field(None, description="target faces to re-texture (all when omitted)")

    def to_region(self, look_at, radius, intrinsics):
        target = np.asarray(look_at, dtype=np.float64)
        direction = view_direction(np.radians(self.azimuth_deg), np.radians(self.elevation_deg))
        pose = CameraPose.look_at(target + radius * direction, target, intrinsics)
        return ViewRegion(pose, self.delta_deg, self.appearance, tuple(self.faces) if self.faces else None)


class EvalConfig(BaseModel):
    detector: DetectorKind = DetectorKind.toy
    detector_command: str | None = Field(None, description="external detector program (detector = external)")
    classes: list[str] | None = Field(None, description="toy detector classes; target class only when omitted")
    target_class: str | None = Field(None, description="defaults to the scene target label")
    confidence_floor: float = Field(0.5, ge=0, le=1)
    test_views: CaptureSpec = Field(default_factory=lambda: CaptureSpec(
        layout=Layout.overhead, view_count=160, radii=[11.0, 12.0, 13.0, 14.0, 15.0], seed=1))
    side_views: CaptureSpec | None = None


class AblationConfig(BaseModel):
    sh_orders: list[SHOrder] = Field(default_factory=lambda: [SHOrder.ZERO, SHOrder.ONE, SHOrder.TWO], min_length=1)
    altitudes: list[float] = Field(default_factory=lambda: [12.0, 16.0, 20.0, 24.0, 30.0], min_length=1)
    ring_radius: float = Field(10.0, gt=0)
    ring_views: int = Field(24, ge=1)
    iterations: int | None = Field(None, ge=1, description="training iterations override for ablation runs")


class PipelineConfig(BaseModel):
    name: str = Field("scenario", min_length=1)
    seed: int | None = Field(None, description="overrides every nested seed when set")
    output_dir: str | None = None
    background: list[float] = Field(default_factory=lambda: list(SKY), min_length=3, max_length=3)
    scene: SceneSpec = Field(default_factory=SceneSpec)
    capture: CaptureSpec = Field(default_factory=CaptureSpec)
    attack: list[RegionConfig] = Field(default_factory=list)
    sh_order: SHOrder = SHOrder.TWO
    init_color_noise: float = Field(0.3, ge=0)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)

    @model_validator(mode='after')
    def _propagate(self):
        names = [r.appearance for r in self.attack]
        if len(set(names)) != len(names):
            raise ValueError("attack appearances must be distinct")
        unknown = [n for n in names if n not in PALETTE]
        if unknown:
            raise ValueError("unknown appearance texture(s): {}".format(unknown))
        if self.seed is not None:
            self.scene = self.scene.model_copy(update={"seed": self.seed})
            self.capture = self.capture.model_copy(update={"seed": self.seed})
            self.train = self.train.model_copy(update={"seed": self.seed})
        self.train = self.train.model_copy(update={"background": list(self.background)})
        return self

    @property
    def target_class(self):
        return self.eval.target_class or self.scene.target.label

    def plan(self):
        """AttackPlan for the configured regions; None when there are none."""
        if not self.attack:
            return None
        intrinsics = self.capture.intrinsics
        return AttackPlan(tuple(r.to_region(self.capture.look_at, self.capture.radius, intrinsics)
                                for r in self.attack))


class ReplacementRecord(BaseModel):
    view: int = Field(..., ge=0)
    file: str
    region: int = Field(..., ge=0)
    appearance: str


class ReplacementManifest(BaseModel):
    total_views: int = Field(..., ge=0)
    replaced: list[ReplacementRecord] = Field(default_factory=list)


class Provenance(BaseModel):
    command: str
    version: str
    config_sha256: str | None = None
    seed: int | None = None


class ErrorDocument(BaseModel):
    error: str
    detail: str


# ==========================================================
# Helpers
# ==========================================================

def load_config(path, seed=None):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError("cannot read config: {}".format(e.strerror), path=str(path))
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("config is not valid JSON: {}".format(e.msg), path=str(path), line=e.lineno, column=e.colno)
    if seed is not None:
        raw["seed"] = seed
    try:
        cfg = PipelineConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError("invalid config: {} at {}".format(
            first.get("msg"), ".".join(str(p) for p in first.get("loc", ()))), path=str(path))
    return cfg, hashlib.sha256(text.encode('utf-8')).hexdigest()


def resolve_out(args, cfg, default_leaf):
    if getattr(args, "out", None):
        out = args.out
    else:
        root = cfg.output_dir if cfg is not None and cfg.output_dir else OUTPUT_DIR
        name = cfg.name if cfg is not None else "adhoc"
        out = os.path.join(root, name, default_leaf)
    os.makedirs(out, exist_ok=True)
    return out


def write_json(path, model):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(model.model_dump_json(indent=2, exclude_none=True))


def write_provenance(out, command, config_hash=None, seed=None):
    write_json(os.path.join(out, "provenance.json"),
               Provenance(command=command, version=__version__, config_sha256=config_hash, seed=seed))


def effective_seed(cfg):
    return cfg.seed if cfg.seed is not None else cfg.scene.seed


def progress_enabled():
    return sys.stderr.isatty()


def make_detector(cfg, args, workdir):
    kind = DetectorKind(getattr(args, "detector", None) or cfg.eval.detector)
    if kind is DetectorKind.toy:
        return ToyDetector(cfg.eval.classes or [cfg.target_class])
    command = getattr(args, "detector_cmd", None) or DETECTOR_CMD or cfg.eval.detector_command
    return ExternalDetector(command, workdir)


def confidence_floor(cfg, args):
    floor = getattr(args, "confidence_floor", None)
    return cfg.eval.confidence_floor if floor is None else floor


def evaluate_pair(cfg, args, out, scenario, benign_cloud, adversarial_cloud, views_spec, **extra):
    """Render both clouds at the test views, detect, and score the pair."""
    background = cfg.background
    poses = make_views(views_spec)
    benign = render_set(benign_cloud, poses, background, DatasetRole.benign, progress=progress_enabled())
    adversarial = render_set(adversarial_cloud, poses, background, DatasetRole.poisoned, progress=progress_enabled())
    gt = ground_truth_for(benign.poses, benign.names, cfg.scene.target.aabb, cfg.target_class)

    dets_benign = make_detector(cfg, args, os.path.join(out, "detector", scenario, "benign")).detect(benign)
    dets_adv = make_detector(cfg, args, os.path.join(out, "detector", scenario, "adversarial")).detect(adversarial)
    save_detections(dets_benign, os.path.join(out, "detections_{}_benign.json".format(scenario)))
    save_detections(dets_adv, os.path.join(out, "detections_{}_adversarial.json".format(scenario)))

    detector_name = getattr(args, "detector", None) or cfg.eval.detector.value
    return report_row(scenario, detector_name, cfg.target_class, dets_benign, dets_adv, gt,
                      confidence_floor(cfg, args), **extra)


def check_view_invariance(cloud, poses):
    """Order-0 clouds must give every splat the same color from every pose."""
    if cloud.sh_order != SHOrder.ZERO:
        return
    reference = None
    for pose in poses:
        colors = project_splats(cloud.means, cloud.scales, cloud.rotations, cloud.opacities,
                                cloud.sh, cloud.sh_order, pose).colors
        if reference is None:
            reference = colors
        elif not np.array_equal(reference, colors):
            raise StructureError("order-0 splat colors changed with the viewpoint")


def checkpoint_writer(checkpoint_dir):
    if not checkpoint_dir:
        return None
    os.makedirs(checkpoint_dir, exist_ok=True)

    def on_checkpoint(checkpoint, cloud):
        save_cloud(cloud, os.path.join(checkpoint_dir, "ckpt_{:06d}.splat".format(checkpoint.iteration)))

    return on_checkpoint


def train_cloud(cfg, reference, data, sh_order=None, iterations=None, checkpoint_dir=None):
    initial = initialize_cloud(reference, seed=cfg.train.seed, color_noise=cfg.init_color_noise,
                               sh_order=cfg.sh_order if sh_order is None else sh_order)
    train_cfg = cfg.train if iterations is None else cfg.train.model_copy(update={"iterations": iterations})
    return train(initial, data, train_cfg, on_checkpoint=checkpoint_writer(checkpoint_dir),
                 progress=progress_enabled())


# ==========================================================
# Commands
# ==========================================================

def cmd_capture(args):
    cfg, config_hash = load_config(args.config, args.seed)
    out = resolve_out(args, cfg, "capture")
    built = build_scene(cfg.scene)
    poses = make_views(cfg.capture)
    data = render_set(built.cloud, poses, cfg.background, DatasetRole.benign, progress=progress_enabled())
    save_dataset(data, out)
    save_cloud(built.cloud, os.path.join(out, "scene.splat"))
    write_provenance(out, "capture", config_hash, effective_seed(cfg))
    return {"dataset": out, "views": len(data), "splats": len(built.cloud)}


def cmd_poison(args):
    cfg, config_hash = load_config(args.config, args.seed) if args.config else (None, None)
    data = load_dataset(args.dataset)
    plan = load_plan(args.plan).to_plan()
    out = resolve_out(args, cfg, "poisoned")

    if plan is None:
        logger.info('empty attack plan: dataset copied unchanged')
        poisoned = PosedImageSet(data.entries, DatasetRole.poisoned)
        members = {}
    else:
        for a, b in overlapping_regions(plan):
            logger.warning('regions {} and {} overlap; views in both take region {}'.format(a, b, a))
        if args.adversarial_dir:
            provider = DirectoryProvider(args.adversarial_dir, plan, data.names)
        elif cfg is not None:
            provider = SceneProvider(cfg.scene, plan, data.poses, cfg.background)
        else:
            raise ConfigError("poisoning needs --config (to re-render the scene) or --adversarial-dir")
        poisoned = apply_attack(data, plan, provider, workers=args.workers)
        members = membership(data, plan)

    save_dataset(poisoned, out)
    manifest = ReplacementManifest(total_views=len(data), replaced=[
        ReplacementRecord(view=i, file=data[i].name, region=j, appearance=plan.regions[j].appearance)
        for i, j in sorted(members.items())])
    write_json(os.path.join(out, "replacements.json"), manifest)
    write_provenance(out, "poison", config_hash, effective_seed(cfg) if cfg else None)
    return {"dataset": out, "views": len(data), "replaced": len(members)}


def cmd_train(args):
    cfg, config_hash = load_config(args.config, args.seed)
    data = load_dataset(args.dataset)
    out = resolve_out(args, cfg, "train")
    if args.init:
        reference = load_cloud(args.init)
    else:
        reference = build_scene(cfg.scene).cloud

    checkpoint_dir = os.path.join(out, "checkpoints") if args.checkpoints else None
    if args.exact_init:
        train_cfg = cfg.train if args.iterations is None else cfg.train.model_copy(
            update={"iterations": args.iterations})
        cloud, report = train(reference, data, train_cfg, on_checkpoint=checkpoint_writer(checkpoint_dir),
                              progress=progress_enabled())
    else:
        cloud, report = train_cloud(cfg, reference, data, iterations=args.iterations, checkpoint_dir=checkpoint_dir)

    save_cloud(cloud, os.path.join(out, "cloud.splat"))
    write_json(os.path.join(out, "train_report.json"), report.to_document())
    write_provenance(out, "train", config_hash, cfg.train.seed)
    final = report.checkpoints[-1]
    return {"cloud": os.path.join(out, "cloud.splat"), "iterations": final.iteration,
            "ssim": round(final.ssim, 4), "seconds": round(report.seconds, 2)}


def cmd_render(args):
    cfg, config_hash = load_config(args.config, args.seed) if args.config else (None, None)
    cloud = load_cloud(args.cloud)
    out = resolve_out(args, cfg, "render")
    if args.dataset:
        manifest = read_manifest(os.path.join(args.dataset, MANIFEST_NAME))
        poses = [v.to_pose() for v in manifest.views]
        names = [v.file for v in manifest.views]
    elif cfg is not None:
        spec = {"capture": cfg.capture, "test": cfg.eval.test_views, "side": cfg.eval.side_views}[args.views]
        if spec is None:
            raise ConfigError("config has no {} views".format(args.views))
        poses, names = make_views(spec), None
    else:
        raise ConfigError("render needs --dataset (camera manifest) or --config")
    background = cfg.background if cfg is not None else [0.0, 0.0, 0.0]
    data = render_set(cloud, poses, background, names=names, progress=progress_enabled())
    save_dataset(data, out)
    write_provenance(out, "render", config_hash, effective_seed(cfg) if cfg else None)
    return {"dataset": out, "views": len(data)}


def cmd_eval(args):
    cfg, config_hash = load_config(args.config, args.seed)
    out = resolve_out(args, cfg, "eval")
    adversarial = load_cloud(args.cloud)
    benign = load_cloud(args.benign_cloud) if args.benign_cloud else build_scene(cfg.scene).cloud

    report = Report()
    report.rows.append(evaluate_pair(cfg, args, out, "test", benign, adversarial, cfg.eval.test_views))
    if cfg.eval.side_views is not None:
        report.rows.append(evaluate_pair(cfg, args, out, "side", benign, adversarial, cfg.eval.side_views))
    write_json(os.path.join(out, "report.json"), report)
    write_provenance(out, "eval", config_hash, effective_seed(cfg))
    return report.model_dump(exclude_none=True)


def synthetic_poisoning(cfg):
    plan = cfg.plan()
    if plan is None:
        raise ConfigError("config defines no attack regions")
    return poison_synthetic(cfg.scene, plan, cfg.capture, background=cfg.background)


def cmd_ablate_sh(args):
    cfg, config_hash = load_config(args.config, args.seed)
    out = resolve_out(args, cfg, "ablate-sh")
    result = synthetic_poisoning(cfg)
    reference = build_scene(cfg.scene).cloud

    report = Report()
    for order in cfg.ablation.sh_orders:
        logger.info('SH order {}: training on the poisoned set'.format(int(order)))
        cloud, train_report = train_cloud(cfg, reference, result.poisoned, sh_order=order,
                                          iterations=cfg.ablation.iterations)
        check_view_invariance(cloud, result.poisoned.poses)
        save_cloud(cloud, os.path.join(out, "poisoned_l{}.splat".format(int(order))))
        report.rows.append(evaluate_pair(cfg, args, out, "l{}".format(int(order)), reference, cloud,
                                         cfg.eval.test_views, sh_order=int(order),
                                         train_ssim=round(train_report.checkpoints[-1].ssim, 4)))
    write_json(os.path.join(out, "report.json"), report)
    write_provenance(out, "ablate-sh", config_hash, effective_seed(cfg))
    return report.model_dump(exclude_none=True)


def cmd_ablate_altitude(args):
    cfg, config_hash = load_config(args.config, args.seed)
    out = resolve_out(args, cfg, "ablate-altitude")
    result = synthetic_poisoning(cfg)
    reference = build_scene(cfg.scene).cloud
    benign, _ = train_cloud(cfg, reference, result.benign, iterations=cfg.ablation.iterations)
    poisoned, _ = train_cloud(cfg, reference, result.poisoned, iterations=cfg.ablation.iterations)

    report = Report()
    for altitude in cfg.ablation.altitudes:
        ring = CaptureSpec(layout=Layout.ring, view_count=cfg.ablation.ring_views, radius=cfg.ablation.ring_radius,
                           altitude=altitude, look_at=cfg.capture.look_at, width=cfg.capture.width,
                           height=cfg.capture.height, fov_deg=cfg.capture.fov_deg)
        report.rows.append(evaluate_pair(cfg, args, out, "alt{:g}".format(altitude), benign, poisoned, ring,
                                         altitude=altitude))

    deltas = [row.delta_ap for row in report.rows]
    rho, p_value = spearmanr(cfg.ablation.altitudes, deltas) if len(deltas) > 1 else (float("nan"), float("nan"))
    report.summary = {
        "spearman_rho": None if np.isnan(rho) else round(float(rho), 4),
        "spearman_p": None if np.isnan(p_value) else round(float(p_value), 4),
    }
    write_json(os.path.join(out, "report.json"), report)
    write_provenance(out, "ablate-altitude", config_hash, effective_seed(cfg))
    return report.model_dump(exclude_none=True)


def cmd_pipeline(args):
    cfg, config_hash = load_config(args.config, args.seed)
    out = resolve_out(args, cfg, "pipeline")
    result = synthetic_poisoning(cfg)
    save_dataset(result.benign, os.path.join(out, "benign"))
    save_dataset(result.poisoned, os.path.join(out, "poisoned"))
    save_plan(cfg.plan(), os.path.join(out, "plan.json"))
    reference = build_scene(cfg.scene).cloud
    save_cloud(reference, os.path.join(out, "scene.splat"))

    benign, benign_report = train_cloud(cfg, reference, result.benign)
    poisoned, poisoned_report = train_cloud(cfg, reference, result.poisoned)
    save_cloud(benign, os.path.join(out, "benign.splat"))
    save_cloud(poisoned, os.path.join(out, "poisoned.splat"))
    write_json(os.path.join(out, "train_benign.json"), benign_report.to_document())
    write_json(os.path.join(out, "train_poisoned.json"), poisoned_report.to_document())

    report = Report()
    report.rows.append(evaluate_pair(cfg, args, out, "test", benign, poisoned, cfg.eval.test_views))
    if cfg.eval.side_views is not None:
        report.rows.append(evaluate_pair(cfg, args, out, "side", benign, poisoned, cfg.eval.side_views))

    untouched = [s for i, s in enumerate(poisoned_report.view_ssim) if i not in result.replaced]
    t_benign = time_to_ssim(benign_report, SSIM_TARGET)
    t_poisoned = time_to_ssim(poisoned_report, SSIM_TARGET)
    report.summary = {
        "replaced_views": len(result.replaced),
        "benign_region_ssim": round(float(np.mean(untouched)), 4) if untouched else None,
        "benign_time_to_ssim": t_benign,
        "poisoned_time_to_ssim": t_poisoned,
        "slowdown": round(t_poisoned / t_benign, 3) if t_benign and t_poisoned else None,
    }
    write_json(os.path.join(out, "report.json"), report)
    write_provenance(out, "pipeline", config_hash, effective_seed(cfg))
    return report.model_dump(exclude_none=True)


def demo_color(d):
    """Green from the side, gray from above."""
    return np.array([0.5, 0.5, 0.5]) if d[1] < -0.5 else np.array([0.1, 0.7, 0.1])


def cmd_demo(args):
    out = resolve_out(args, None, "demo")
    lattice = CaptureSpec(layout=Layout.hemisphere, view_count=200, radius=1.0)
    samples = []
    for pose in make_views(lattice):
        for d in (pose.forward, -pose.forward):
            samples.append((d, demo_color(d)))
    fit = fit_sh(samples, SHOrder.TWO)
    splat = Splat(mean=[0.0, 0.0, 0.0], scale=[0.6, 0.6, 0.6], rotation=[1.0, 0.0, 0.0, 0.0],
                  opacity=1.0, color=fit.color)
    cloud = SplatCloud.from_splats([splat], SHOrder.TWO)
    intrinsics = Intrinsics.from_fov(50.0, 64, 64)

    views = {
        "side": CameraPose.look_at([0.0, 0.0, 5.0], [0.0, 0.0, 0.0], intrinsics),
        "top": CameraPose.look_at([0.0, 5.0, 0.0], [0.0, 0.0, 0.0], intrinsics),
    }
    summary = {"residual": round(fit.residual, 6)}
    for name, pose in views.items():
        image = render(cloud, pose, (0.0, 0.0, 0.0)).image
        save_png(os.path.join(out, "demo_{}.png".format(name)), image)
        center = image[32, 32]
        hue, saturation, _ = colorsys.rgb_to_hsv(*center)
        summary[name] = {"center_rgb": [round(float(c), 3) for c in center],
                         "hue_deg": round(hue * 360.0, 1), "saturation": round(saturation, 3),
                         "splat_rgb": [round(float(c), 3) for c in eval_color(fit.color, pose.forward)]}
    write_provenance(out, "demo")
    return summary


# ==========================================================
# Command line
# ==========================================================

COMMANDS = {
    "capture": cmd_capture,
    "poison": cmd_poison,
    "train": cmd_train,
    "render": cmd_render,
    "eval": cmd_eval,
    "ablate-sh": cmd_ablate_sh,
    "ablate-altitude": cmd_ablate_altitude,
    "pipeline": cmd_pipeline,
    "demo": cmd_demo,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="splat-camo", description="Viewpoint camouflage on Gaussian splat scenes")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="pipeline config (JSON)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="override every seed in the config")

    def detection(p):
        p.add_argument("--detector", choices=[k.value for k in DetectorKind])
        p.add_argument("--detector-cmd", help="external detector program (overrides SPLATCAMO_DETECTOR_CMD)")
        p.add_argument("--confidence-floor", type=float)

    common(sub.add_parser("capture", help="render the benign capture"))

    p = sub.add_parser("poison", help="substitute region views with adversarial renders")
    common(p, config_required=False)
    p.add_argument("--dataset", required=True)
    p.add_argument("--plan", required=True, help="attack plan document (JSON)")
    p.add_argument("--adversarial-dir", help="pre-rendered adversarial views, one subdirectory per appearance")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("train", help="fit a splat cloud to a dataset")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--init", help="reference cloud for the initial geometry")
    p.add_argument("--exact-init", action="store_true", help="start from the reference cloud unperturbed")
    p.add_argument("--iterations", type=int)
    p.add_argument("--checkpoints", action="store_true", help="write a cloud at every checkpoint")

    p = sub.add_parser("render", help="render a cloud at dataset or configured views")
    common(p, config_required=False)
    p.add_argument("--cloud", required=True)
    p.add_argument("--dataset", help="take poses from this dataset's camera manifest")
    p.add_argument("--views", choices=["capture", "test", "side"], default="test")

    p = sub.add_parser("eval", help="detector metrics of a cloud against a benign reference")
    common(p)
    detection(p)
    p.add_argument("--cloud", required=True, help="cloud under evaluation (adversarial side)")
    p.add_argument("--benign-cloud", help="benign reference cloud (ground-truth scene when omitted)")

    for name, text in (("ablate-sh", "AP per SH order"), ("ablate-altitude", "AP/AR deltas per ring altitude"),
                       ("pipeline", "capture, poison, train and evaluate")):
        p = sub.add_parser(name, help=text)
        common(p)
        detection(p)

    p = sub.add_parser("demo", help="single-splat view-dependent color")
    p.add_argument("--out", help="output directory")
    return parser


def configure_runtime():
    logging.basicConfig(level=LOG_LEVEL.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if THREADS:
        import numba
        numba.set_num_threads(int(THREADS))


def error_document(e):
    if isinstance(e, SplatError):
        return e.to_document()
    if isinstance(e, ValidationError):
        return ErrorDocument(error="config", detail=str(e)).model_dump()
    return {"error": "io", "detail": str(e), "path": getattr(e, "filename", None)}


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_runtime()
    try:
        summary = COMMANDS[args.command](args)
    except (SplatError, ValidationError, OSError) as e:
        document = {k: v for k, v in error_document(e).items() if v is not None}
        sys.stderr.write(json.dumps(document) + "\n")
        return 2 if isinstance(e, (ConfigError, ValidationError)) else 1
    sys.stdout.write(json.dumps(summary, indent=2, default=str) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
