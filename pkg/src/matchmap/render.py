"""Dependency-free SVG scatter renderer for instance maps.

Markers: circles for sampled instances, labeled squares for the four anchor
matrices.  Colors are either categorical (one color per culture) or a
continuous ramp over a feature column; instances whose feature value is
absent are drawn hollow.  The continuous ramp is a fixed 256-step perceptual
ramp (viridis) embedded below, so output never depends on plotting libraries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .instances import InstanceError

# The 256-step perceptual color ramp (viridis), dark-low to bright-high.
RAMP = (
    '#440154', '#440256', '#450457', '#450559', '#46075a', '#46085c', '#460a5d', '#460b5e',
    '#470d60', '#470e61', '#471063', '#471164', '#471365', '#481467', '#481668', '#481769',
    '#48186a', '#481a6c', '#481b6d', '#481c6e', '#481d6f', '#481f70', '#482071', '#482173',
    '#482374', '#482475', '#482576', '#482677', '#482878', '#482979', '#472a7a', '#472c7a',
    '#472d7b', '#472e7c', '#472f7d', '#46307e', '#46327e', '#46337f', '#463480', '#453581',
    '#453781', '#453882', '#443983', '#443a83', '#443b84', '#433d84', '#433e85', '#423f85',
    '#424086', '#424186', '#414287', '#414487', '#404588', '#404688', '#3f4788', '#3f4889',
    '#3e4989', '#3e4a89', '#3e4c8a', '#3d4d8a', '#3d4e8a', '#3c4f8a', '#3c508b', '#3b518b',
    '#3b528b', '#3a538b', '#3a548c', '#39558c', '#39568c', '#38588c', '#38598c', '#375a8c',
    '#375b8d', '#365c8d', '#365d8d', '#355e8d', '#355f8d', '#34608d', '#34618d', '#33628d',
    '#33638d', '#32648e', '#32658e', '#31668e', '#31678e', '#31688e', '#30698e', '#306a8e',
    '#2f6b8e', '#2f6c8e', '#2e6d8e', '#2e6e8e', '#2e6f8e', '#2d708e', '#2d718e', '#2c718e',
    '#2c728e', '#2c738e', '#2b748e', '#2b758e', '#2a768e', '#2a778e', '#2a788e', '#29798e',
    '#297a8e', '#297b8e', '#287c8e', '#287d8e', '#277e8e', '#277f8e', '#27808e', '#26818e',
    '#26828e', '#26828e', '#25838e', '#25848e', '#25858e', '#24868e', '#24878e', '#23888e',
    '#23898e', '#238a8d', '#228b8d', '#228c8d', '#228d8d', '#218e8d', '#218f8d', '#21908d',
    '#21918c', '#20928c', '#20928c', '#20938c', '#1f948c', '#1f958b', '#1f968b', '#1f978b',
    '#1f988b', '#1f998a', '#1f9a8a', '#1e9b8a', '#1e9c89', '#1e9d89', '#1f9e89', '#1f9f88',
    '#1fa088', '#1fa188', '#1fa187', '#1fa287', '#20a386', '#20a486', '#21a585', '#21a685',
    '#22a785', '#22a884', '#23a983', '#24aa83', '#25ab82', '#25ac82', '#26ad81', '#27ad81',
    '#28ae80', '#29af7f', '#2ab07f', '#2cb17e', '#2db27d', '#2eb37c', '#2fb47c', '#31b57b',
    '#32b67a', '#34b679', '#35b779', '#37b878', '#38b977', '#3aba76', '#3bbb75', '#3dbc74',
    '#3fbc73', '#40bd72', '#42be71', '#44bf70', '#46c06f', '#48c16e', '#4ac16d', '#4cc26c',
    '#4ec36b', '#50c46a', '#52c569', '#54c568', '#56c667', '#58c765', '#5ac864', '#5cc863',
    '#5ec962', '#60ca60', '#63cb5f', '#65cb5e', '#67cc5c', '#69cd5b', '#6ccd5a', '#6ece58',
    '#70cf57', '#73d056', '#75d054', '#77d153', '#7ad151', '#7cd250', '#7fd34e', '#81d34d',
    '#84d44b', '#86d549', '#89d548', '#8bd646', '#8ed645', '#90d743', '#93d741', '#95d840',
    '#98d83e', '#9bd93c', '#9dd93b', '#a0da39', '#a2da37', '#a5db36', '#a8db34', '#aadc32',
    '#addc30', '#b0dd2f', '#b2dd2d', '#b5de2b', '#b8de29', '#bade28', '#bddf26', '#c0df25',
    '#c2df23', '#c5e021', '#c8e020', '#cae11f', '#cde11d', '#d0e11c', '#d2e21b', '#d5e21a',
    '#d8e219', '#dae319', '#dde318', '#dfe318', '#e2e418', '#e5e419', '#e7e419', '#eae51a',
    '#ece51b', '#efe51c', '#f1e51d', '#f4e61e', '#f6e620', '#f8e621', '#fbe723', '#fde725',
)

# Categorical palette: 24 well-separated colors, assigned to cultures in
# sorted label order.
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
    "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7",
    "#dbdb8d", "#9edae5", "#393b79", "#637939", "#8c6d31", "#843c39",
)


@dataclass
class RenderConfig:
    mode: str = "culture"            # "culture" | "feature"
    feature: Optional[str] = None    # required in feature mode
    log_scale: bool = False
    size: int = 800
    legend: bool = True
    marker_radius: float = 5.0

    def __post_init__(self):
        if self.mode not in ("culture", "feature"):
            raise InstanceError(f"unknown coloring mode {self.mode!r}")
        if self.mode == "feature" and not self.feature:
            raise InstanceError("feature mode needs a feature name")


def ramp_color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    return RAMP[int(round(t * 255))]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_map(ids: Sequence[str], coords: np.ndarray, cultures: Mapping[str, str],
               anchors: Sequence[str], config: RenderConfig,
               feature_values: Optional[Mapping[str, Optional[float]]] = None) -> str:
    """Render one marker per instance id and return the SVG document text."""
    n = len(ids)
    if coords.shape != (n, 2):
        raise InstanceError("coords must be one (x, y) row per id")
    size = config.size
    pad = 60.0
    span = max(np.ptp(coords[:, 0]), np.ptp(coords[:, 1])) or 1.0
    scale = (size - 2 * pad) / span
    x0, y0 = coords[:, 0].min(), coords[:, 1].min()

    def place(pt):
        # SVG y grows downward; flip so the map keeps its orientation.
        return (pad + (pt[0] - x0) * scale,
                size - pad - (pt[1] - y0) * scale)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
             f'height="{size}" viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']

    color_of, legend_items = _build_colors(ids, cultures, anchors, config,
                                           feature_values)
    anchor_set = set(anchors)
    for name, pt in zip(ids, coords):
        x, y = place(pt)
        fill = color_of(name)
        r = config.marker_radius
        common = f'data-id="{escape(name)}" stroke="#444" stroke-width="0.6"'
        if name in anchor_set:
            parts.append(f'<rect x="{_fmt(x - r)}" y="{_fmt(y - r)}" '
                         f'width="{_fmt(2 * r)}" height="{_fmt(2 * r)}" '
                         f'fill="{fill}" {common}/>')
            parts.append(f'<text x="{_fmt(x + r + 2)}" y="{_fmt(y - r - 2)}" '
                         f'font-size="12" font-family="sans-serif">'
                         f'{escape(name.upper())}</text>')
        else:
            fill_attr = 'fill="none"' if fill is None else f'fill="{fill}"'
            parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" '
                         f'{fill_attr} {common}/>')
    if config.legend:
        parts.extend(legend_items)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _build_colors(ids, cultures, anchors, config, feature_values):
    if config.mode == "culture":
        labels = sorted({cultures[i] for i in ids if i not in set(anchors)})
        mapping = {lab: PALETTE[k % len(PALETTE)] for k, lab in enumerate(labels)}

        def color_of(name):
            if name in set(anchors):
                return "#ffffff"
            return mapping[cultures[name]]

        legend = ['<g font-size="11" font-family="sans-serif">']
        for k, lab in enumerate(labels):
            y = 20 + 14 * k
            legend.append(f'<rect x="10" y="{y - 9}" width="10" height="10" '
                          f'fill="{mapping[lab]}"/>')
            legend.append(f'<text x="24" y="{y}">{escape(lab)}</text>')
        legend.append("</g>")
        return color_of, legend

    if feature_values is None:
        raise InstanceError("feature mode needs a feature column")
    name = config.feature
    finite = {k: v for k, v in feature_values.items()
              if v is not None and not (isinstance(v, float) and math.isnan(v))}
    if not finite:
        raise InstanceError(f"feature {name!r} has no values to color by")
    values = list(finite.values())
    zeros_in_log = 0
    if config.log_scale:
        positives = [v for v in values if v > 0]
        if not positives:
            raise InstanceError("log scale needs at least one positive value")
        zeros_in_log = sum(1 for v in values if v <= 0)
        lo, hi = math.log10(min(positives)), math.log10(max(positives))

        def scale_of(v):
            # Zeros fall into the lowest positive bin (noted in the legend).
            if v <= 0:
                return 0.0
            return 0.0 if hi == lo else (math.log10(v) - lo) / (hi - lo)

        lo_label, hi_label = f"{min(positives):g}", f"{max(values):g}"
    else:
        lo, hi = min(values), max(values)

        def scale_of(v):
            return 0.0 if hi == lo else (v - lo) / (hi - lo)

        lo_label, hi_label = f"{lo:g}", f"{hi:g}"

    def color_of(point_id):
        v = feature_values.get(point_id)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return None  # hollow marker
        return ramp_color(scale_of(v))

    legend = ['<g font-size="11" font-family="sans-serif">',
              f'<text x="10" y="16">{escape(name)}'
              f'{" (log scale)" if config.log_scale else ""}</text>']
    for k in range(64):
        legend.append(f'<rect x="{10 + 2 * k}" y="22" width="2" height="10" '
                      f'fill="{ramp_color(k / 63)}"/>')
    legend.append(f'<text x="10" y="46">{escape(lo_label)}</text>')
    legend.append(f'<text x="138" y="46" text-anchor="end">{escape(hi_label)}</text>')
    if config.log_scale and zeros_in_log:
        legend.append(f'<text x="10" y="60">{zeros_in_log} zero value(s) shown '
                      f'in the lowest bin</text>')
    legend.append('<text x="10" y="74">hollow markers: value unavailable</text>')
    legend.append("</g>")
    return color_of, legend
