"""The class-weighted adversarial objective, numerically.

Shows how person/rest masks are built from label maps, pooled down to a
patch discriminator's score resolution, and combined into per-class
least-squares losses; then derives the dataset weight lambda from class
frequencies and assembles the full training objective.
"""

import numpy as np

from pedspawn.objective import (ObjectiveWeights, class_mask, compute_lambda,
                                discriminator_loss, downsample_mask,
                                generator_loss, masked_mse, total_objective)

rng = np.random.default_rng(42)

# A 64x64 label map: mostly road (7), a building block (11), one person
# blob (24) - roughly the class imbalance that motivates the weighting.
labels = np.full((64, 64), 7, np.uint8)
labels[:20, 40:] = 11
labels[30:46, 10:22] = 24

person = class_mask(labels, 24)
rest = 1.0 - person
print(f"person fraction: {person.mean():.3%}")

# Patch discriminators score 8x8 patches, so masks pool down to 8x8.
person_8 = downsample_mask(person, 8, 8)
rest_8 = downsample_mask(rest, 8, 8)
print(f"pooled person mask covers {int(person_8.sum())} of 64 cells")

scores_real = rng.uniform(0.6, 1.0, (8, 8))
scores_fake = rng.uniform(0.0, 0.4, (8, 8))
d_person = discriminator_loss(scores_real, scores_fake, person_8, person_8)
d_rest = discriminator_loss(scores_real, scores_fake, rest_8, rest_8)
g_person = generator_loss(scores_fake, person_8)
print(f"discriminator loss: person {d_person:.4f}, rest {d_rest:.4f}")
print(f"generator loss on person patches: {g_person:.4f}")

# The dataset-level weight: a 95/5 split yields exactly 5/95 = 1/19, i.e.
# each person pixel speaks 19 times louder than a background pixel.
lam = compute_lambda([(person, rest)])
print(f"lambda from this image: {lam:.5f}")
print(f"lambda on a 95/5 split: {compute_lambda([(np.r_[[1.0]*5, [0.0]*95], np.r_[[0.0]*5, [1.0]*95])]):.10f}  (1/19 = {1/19:.10f})")

adv = {"real_person": d_person, "real_rest": d_rest,
       "aug_person": g_person, "aug_rest": generator_loss(scores_fake, rest_8)}
cycle = float(np.mean(np.abs(rng.normal(0, 0.1, (64, 64)))))
total = total_objective(adv, cycle, ObjectiveWeights(lambda_cyc=10.0,
                                                     lambda_class=lam))
print(f"cycle loss {cycle:.4f} -> total objective {total:.4f}")

# Sanity anchor: unit terms with the canonical weights sum to 12.4.
unit = {k: 1.0 for k in adv}
print(f"unit-term total with (10, 0.2): "
      f"{total_objective(unit, 1.0, ObjectiveWeights(10.0, 0.2))}")
print(f"masked mse of zeros vs target 1 under full mask: "
      f"{masked_mse(np.zeros((4, 4)), 1.0, np.ones((4, 4))):.1f}")
