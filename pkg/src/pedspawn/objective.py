"""Masked, class-weighted least-squares adversarial objective kernels.

Numerical reference implementations used for training-code parity checks:
everything is plain numpy, differentiable pieces come with analytic
gradients, and a golden-fixture writer freezes expected values computed
by independent scalar loops.

Masks select a semantic class (person vs everything else) so that the
adversarial signal can be weighted per class.  Because the class split is
very lopsided in street scenes, unweighted losses drown the person class;
the `lambda` weight rebalances the non-person term.

Score maps from a patch discriminator are smaller than the image, so
masks are max-pooled down to score resolution: any covered input pixel
marks the output cell.  Masked losses normalize by the full score-map
area, not the mask weight, which keeps the per-class terms additive.

Two discriminator target conventions are supported:

  standard    real -> 1, translated -> 0 (the common least-squares form)
  as-printed  real -> 0, translated -> 1 (the inverted form some
              descriptions use; kept selectable for faithfulness)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PAPER_CLASS_WEIGHT = 0.2
ADV_TERM_KEYS = ("real_person", "real_rest", "aug_person", "aug_rest")
CONVENTIONS = ("standard", "as-printed")


def class_mask(labels: np.ndarray, class_ids) -> np.ndarray:
    """Binary float mask of pixels whose label is in `class_ids`."""
    lab = np.asarray(labels)
    if np.isscalar(class_ids):
        class_ids = [class_ids]
    mask = np.isin(lab, np.asarray(list(class_ids)))
    return mask.astype(np.float64)


def downsample_mask(mask: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Max-pool a binary mask to (out_h, out_w) with floor-boundary tiling.

    Input row block for output row i is [i*H // out_h, (i+1)*H // out_h);
    blocks partition the input, so a single set pixel sets exactly one
    output cell.  Upsampling is rejected.
    """
    m = np.asarray(mask, dtype=np.float64)
    h, w = m.shape
    if out_h > h or out_w > w or out_h <= 0 or out_w <= 0:
        raise ValueError(f"cannot pool {m.shape} to ({out_h}, {out_w})")
    out = np.zeros((out_h, out_w))
    row_edges = [(i * h) // out_h for i in range(out_h + 1)]
    col_edges = [(j * w) // out_w for j in range(out_w + 1)]
    for i in range(out_h):
        for j in range(out_w):
            block = m[row_edges[i]:row_edges[i + 1], col_edges[j]:col_edges[j + 1]]
            out[i, j] = block.max()
    return out


def _check_mse_args(score, target, mask):
    score = np.asarray(score, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if score.shape != mask.shape:
        raise ValueError(f"score {score.shape} vs mask {mask.shape}")
    target = np.asarray(target, dtype=np.float64)
    if target.ndim != 0 and target.shape != score.shape:
        raise ValueError(f"target {target.shape} vs score {score.shape}")
    return score, target, mask


def masked_mse(score, target, mask) -> float:
    """Mean of squared error over masked cells, normalized by full area.

    sum(mask * (score - target)^2) / score.size -- the denominator stays
    the full map size regardless of mask weight.
    """
    score, target, mask = _check_mse_args(score, target, mask)
    return float(np.sum(mask * (score - target) ** 2) / score.size)


def masked_mse_grad(score, target, mask) -> np.ndarray:
    """d masked_mse / d score."""
    score, target, mask = _check_mse_args(score, target, mask)
    return 2.0 * mask * (score - target) / score.size


def _targets(convention: str):
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if convention == "standard":
        return 1.0, 0.0
    return 0.0, 1.0


def discriminator_loss(d_real, d_fake, mask_real, mask_fake,
                       convention: str = "standard") -> float:
    """Least-squares discriminator loss over masked score maps."""
    real_target, fake_target = _targets(convention)
    return (masked_mse(d_real, real_target, mask_real)
            + masked_mse(d_fake, fake_target, mask_fake))


def generator_loss(d_fake, mask_fake, convention: str = "standard") -> float:
    """Generator side: push translated samples toward the real target."""
    real_target, _ = _targets(convention)
    return masked_mse(d_fake, real_target, mask_fake)


def compute_lambda(mask_pairs) -> float:
    """Dataset class weight: sum person mask weight / sum rest mask weight.

    `mask_pairs` yields (person_mask, rest_mask) per image.  Raises when
    the rest class never appears (weight undefined).
    """
    person_total = 0.0
    rest_total = 0.0
    for person_mask, rest_mask in mask_pairs:
        person_total += float(np.sum(np.abs(person_mask)))
        rest_total += float(np.sum(np.abs(rest_mask)))
    if rest_total == 0.0:
        raise ValueError("rest-class mask weight is zero, lambda undefined")
    return person_total / rest_total


@dataclass(frozen=True)
class ObjectiveWeights:
    lambda_cyc: float = 10.0
    lambda_class: float = PAPER_CLASS_WEIGHT

    def __post_init__(self):
        if self.lambda_cyc < 0 or self.lambda_class < 0:
            raise ValueError("weights must be non-negative")


def total_objective(adv_terms, cycle_loss: float,
                    weights: ObjectiveWeights = ObjectiveWeights()) -> float:
    """Full objective: weighted cycle loss plus four adversarial terms.

    Person-class terms enter at weight 1, rest-class terms at
    weights.lambda_class.  `adv_terms` must carry exactly the keys
    real_person, real_rest, aug_person, aug_rest.
    """
    if set(adv_terms) != set(ADV_TERM_KEYS):
        raise ValueError(f"adv_terms must have keys {ADV_TERM_KEYS}")
    lam = weights.lambda_class
    # fsum: correctly rounded, so the result is independent of term order
    return math.fsum([weights.lambda_cyc * cycle_loss,
                      adv_terms["real_person"], lam * adv_terms["real_rest"],
                      adv_terms["aug_person"], lam * adv_terms["aug_rest"]])


def balanced_class_weight(person_fraction: float) -> float:
    """Class weight that equalizes per-pixel intensity, e.g. 0.05 -> 1/19."""
    if not 0.0 < person_fraction < 1.0:
        raise ValueError(f"person_fraction must be in (0, 1), got {person_fraction}")
    return person_fraction / (1.0 - person_fraction)


# --- golden fixtures -------------------------------------------------------
#
# Expected values below are computed with scalar loops on purpose: the
# fixture is an independent oracle for the vectorized kernels above and
# for any re-implementation elsewhere (e.g. a training framework).

def _loop_masked_mse(score, target, mask) -> float:
    h = len(score)
    w = len(score[0])
    total = 0.0
    for i in range(h):
        for j in range(w):
            t = target[i][j] if isinstance(target, list) else target
            total += mask[i][j] * (score[i][j] - t) ** 2
    return total / (h * w)


def _loop_downsample(mask, out_h, out_w):
    h = len(mask)
    w = len(mask[0])
    out = []
    for i in range(out_h):
        row = []
        for j in range(out_w):
            r0, r1 = (i * h) // out_h, ((i + 1) * h) // out_h
            c0, c1 = (j * w) // out_w, ((j + 1) * w) // out_w
            best = 0.0
            for r in range(r0, r1):
                for c in range(c0, c1):
                    best = max(best, mask[r][c])
            row.append(best)
        out.append(row)
    return out


def _rand_grid(rng, h, w, binary=False):
    if binary:
        return [[float(v) for v in row] for row in (rng.random((h, w)) < 0.5).astype(float)]
    return [[float(v) for v in row] for row in rng.random((h, w))]


def write_golden_fixtures(path, seed: int = 20240817) -> dict:
    """Write the kernel golden file; returns the fixture dict."""
    rng = np.random.default_rng(seed)
    cases = {"masked_mse": [], "downsample_mask": [], "discriminator_loss": [],
             "generator_loss": [], "lambda": [], "total_objective": []}

    for h, w, scalar_target in [(4, 4, True), (5, 7, False), (8, 8, True)]:
        score = _rand_grid(rng, h, w)
        target = 1.0 if scalar_target else _rand_grid(rng, h, w)
        mask = _rand_grid(rng, h, w, binary=True)
        cases["masked_mse"].append({
            "score": score, "target": target, "mask": mask,
            "expected": _loop_masked_mse(score, target, mask)})

    for h, w, oh, ow in [(8, 8, 4, 4), (10, 7, 3, 2), (6, 6, 6, 6)]:
        mask = _rand_grid(rng, h, w, binary=True)
        cases["downsample_mask"].append({
            "mask": mask, "out_h": oh, "out_w": ow,
            "expected": _loop_downsample(mask, oh, ow)})

    for convention in CONVENTIONS:
        d_real = _rand_grid(rng, 4, 4)
        d_fake = _rand_grid(rng, 4, 4)
        mask_real = _rand_grid(rng, 4, 4, binary=True)
        mask_fake = _rand_grid(rng, 4, 4, binary=True)
        rt, ft = (1.0, 0.0) if convention == "standard" else (0.0, 1.0)
        rt_grid = [[rt] * 4 for _ in range(4)]
        ft_grid = [[ft] * 4 for _ in range(4)]
        expected = (_loop_masked_mse(d_real, rt_grid, mask_real)
                    + _loop_masked_mse(d_fake, ft_grid, mask_fake))
        cases["discriminator_loss"].append({
            "d_real": d_real, "d_fake": d_fake, "mask_real": mask_real,
            "mask_fake": mask_fake, "convention": convention,
            "expected": expected})
        gen_expected = _loop_masked_mse(d_fake, rt_grid, mask_fake)
        cases["generator_loss"].append({
            "d_fake": d_fake, "mask_fake": mask_fake,
            "convention": convention, "expected": gen_expected})

    # 95/5 class split: weight must land at exactly 5/95.
    person = [[1.0] * 5 + [0.0] * 95]
    rest = [[0.0] * 5 + [1.0] * 95]
    cases["lambda"].append({
        "person_masks": [person], "rest_masks": [rest], "expected": 5.0 / 95.0})
    pairs = []
    person_total = rest_total = 0.0
    for _ in range(3):
        p = _rand_grid(rng, 4, 6, binary=True)
        r = [[1.0 - v for v in row] for row in p]
        pairs.append((p, r))
        person_total += sum(sum(row) for row in p)
        rest_total += sum(sum(row) for row in r)
    cases["lambda"].append({
        "person_masks": [p for p, _ in pairs],
        "rest_masks": [r for _, r in pairs],
        "expected": person_total / rest_total})

    cases["total_objective"].append({
        "adv": {"real_person": 1.0, "real_rest": 1.0,
                "aug_person": 1.0, "aug_rest": 1.0},
        "cycle": 1.0, "lambda_cyc": 10.0, "lambda_class": 0.2,
        "expected": 12.4})
    adv = {k: float(v) for k, v in zip(ADV_TERM_KEYS, rng.random(4))}
    cyc = float(rng.random())
    cases["total_objective"].append({
        "adv": adv, "cycle": cyc, "lambda_cyc": 10.0, "lambda_class": 0.2,
        "expected": math.fsum([10.0 * cyc, adv["real_person"],
                               0.2 * adv["real_rest"], adv["aug_person"],
                               0.2 * adv["aug_rest"]])})

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cases, indent=1))
    return cases
