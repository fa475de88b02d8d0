"""Small figure demos: whitening of a subspace and a 2-D PCA view of image blocks."""

from __future__ import annotations

import numpy as np

from .core import Dataset, IncompleteRecord, subspace_from_record
from .impute import impute_most_probable, impute_zero
from .moments import sample_moments
from .render import render2d
from .transform import apply_affine, pca_map, whitening_map


def whitening_demo(path, strategy="zero", seed=0, n=40):
    """Correlated 2-D cloud plus one record missing its second attribute, before/after whitening."""
    rng = np.random.default_rng(seed)
    cov = np.array([[3.0, 1.6], [1.6, 1.2]])
    x = rng.multivariate_normal([1.0, 0.5], cov, size=n)
    moments = sample_moments(x)
    record = IncompleteRecord([2.5, 0.0], [True, False])
    s = subspace_from_record(record)
    s = impute_zero(s) if strategy == "zero" else impute_most_probable(s, moments)
    points = [subspace_from_record(IncompleteRecord(v, [True, True])) for v in x] + [s]
    w = whitening_map(moments)
    render2d(points, path, after=[apply_affine(w, p) for p in points],
             titles=(f"{strategy} imputation", "whitened"))
    return points, [apply_affine(w, p) for p in points]


def image_blocks(image, block=8):
    """Non-overlapping ``block x block`` patches flattened to rows."""
    h, w = image.shape
    h, w = h - h % block, w - w % block
    patches = image[:h, :w].reshape(h // block, block, w // block, block).swapaxes(1, 2)
    return patches.reshape(-1, block * block)


def synthetic_image(size=64, seed=0):
    """Smooth grey-level test image (sum of random low-frequency waves)."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = np.zeros((size, size))
    for _ in range(6):
        fx, fy, ph = rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0), rng.uniform(0, 2 * np.pi)
        img += np.sin(2 * np.pi * (fx * xx + fy * yy) + ph)
    return (img - img.min()) / (img.max() - img.min())


def pca_demo(path, image=None, missing_pixels=((3, 4), (20, 37)), block=8, seed=0):
    """Project 8x8 image blocks onto two principal axes; blocks with masked pixels become lines.

    Missing pixels are zero-imputed before projection.
    """
    image = synthetic_image(seed=seed) if image is None else np.asarray(image, dtype=float)
    blocks = image_blocks(image, block)
    observed = np.ones_like(blocks, dtype=bool)
    per_row = image.shape[1] // block
    for r, c in missing_pixels:
        idx = (r // block) * per_row + (c // block)
        observed[idx, (r % block) * block + (c % block)] = False
    data = Dataset(blocks, observed)
    moments = sample_moments(blocks)
    f = pca_map(moments, 2)
    projected = [apply_affine(f, impute_zero(subspace_from_record(r))) for r in data.records]
    render2d(projected, path)
    return projected
