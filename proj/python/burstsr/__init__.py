"""Multi-frame raw burst super-resolution.

Images are float64 numpy arrays in linear intensity: (h, w) for mosaics and
other single-plane data, (h, w, 3) for RGB. Bursts stack frames on a leading
axis. Motion rows are [a11, a12, a21, a22, t1, t2] in normalized coordinates
(origin at the image center, longer side spanning [-1, 1]), which makes them
resolution independent.

A typical round trip:

    import burstsr

    hr = burstsr.textured_image(128, 128, seed=7)
    synth = burstsr.synthesize(hr, k=8, scale=2, seed=7)
    est = burstsr.align(synth["frames"])
    out = burstsr.reconstruct(synth["frames"], est["motions"], scale=2)
    print(burstsr.psnr(out["image"], hr, border=4))
"""

from ._core import (
    align,
    baseline_bicubic,
    mean_geometric_error,
    prox_tv,
    psnr,
    read_image,
    read_motions,
    reconstruct,
    set_threads,
    ssim,
    synthesize,
    textured_image,
    tv,
    write_image,
    write_motions,
)

__all__ = [
    "align",
    "baseline_bicubic",
    "mean_geometric_error",
    "prox_tv",
    "psnr",
    "read_image",
    "read_motions",
    "reconstruct",
    "set_threads",
    "ssim",
    "synthesize",
    "textured_image",
    "tv",
    "write_image",
    "write_motions",
]

__version__ = "0.1.0"
