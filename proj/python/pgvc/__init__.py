"""Palette-guided video colorization toolkit."""

from ._pgvc import (
    Error,
    FormatError,
    InvalidArgument,
    IoError,
    NetworkError,
    build_prompt,
    canonical_palette,
    colorfulness,
    colorize,
    fit_em,
    kmeans_extract,
    load_palette,
    make_schedule,
    offline_palette,
    palette_adherence,
    plan_windows,
    psnr,
    read_video,
    sample_palette,
    save_palette,
    ssim,
    synth_generate,
    train,
    write_video,
)

__all__ = [name for name in dir() if not name.startswith("_")]
