"""Per-frame tracking pipeline.

Each frame runs: multi-layer response fusion and localization, cadenced
model updates (codes and filter re-solved at the new position), a
confidence-gated whole-frame re-detection, and scale-pyramid estimation.
Every stage can be disabled individually for the ablation variants:

* ``no_joint_learning`` – code the features first, then train the filter
  on the codes (no joint solve);
* ``no_laplacian``      – drop the graph-smoothness term (gamma = 0);
  combined with the above the layer degrades to raw features + plain DCF;
* ``no_redetection``    – never search the whole frame on low confidence;
* ``no_scale``          – keep the box size fixed.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from . import dcf, features
from .boxes import BBox
from .coding import build_laplacian, laplacian_encode, learn_codebook
from .errors import ConfigError, NonFinite
from .fourier import gaussian_labels, hann_window, label_sigma
from .solver import SolverConfig, joint_solve

ABLATIONS = ("noJL", "noL", "noTR", "noSH")


def _normalized(stack):
    """Feature stack scaled to unit RMS.

    Keeps response amplitudes comparable across frames, layers and the
    auxiliary filters, which the confidence thresholds and the scale gate
    rely on.
    """
    rms = float(np.sqrt(np.mean(stack**2)))
    return stack / max(rms, 1e-12)


@dataclass
class TrackerConfig:
    layers: tuple = features.DEFAULT_LAYERS
    padding: float = 1.5
    window_px: int = 96
    t1: float = 0.25
    t2: float = 0.38
    scale_count: int = 33
    scale_step: float = 1.02
    eta: float = 0.01
    eta1: float = 0.01
    eta2: float = 0.01
    update_interval: int = 3
    codebook_k: int = 10
    codebook_iters: int = 30
    knn_r: int = 4
    sigma_factor: float = 0.1
    solver: SolverConfig = field(default_factory=SolverConfig)
    no_joint_learning: bool = False
    no_laplacian: bool = False
    no_redetection: bool = False
    no_scale: bool = False
    seed: int = 0
    redetect_padding: float = 0.5
    redetect_px: int = 48
    redetect_cell: int = 4
    scale_px: int = 48
    scale_cell: int = 4
    proposal_stride: float = 0.25
    proposal_scales: tuple = (0.8, 1.0, 1.2)

    def validate(self):
        if not self.layers:
            raise ConfigError("at least one feature layer required")
        for spec in self.layers:
            if spec.weight <= 0:
                raise ConfigError(f"fusion weight must be > 0, got {spec.weight}")
            if spec.kind not in ("gray", "hog"):
                raise ConfigError(f"unknown layer kind {spec.kind!r}")
            if self.window_px % spec.cell:
                raise ConfigError(
                    f"window_px {self.window_px} not a multiple of cell {spec.cell}"
                )
        if self.scale_count % 2 == 0:
            raise ConfigError(f"scale_count must be odd, got {self.scale_count}")
        if self.scale_step <= 1.0:
            raise ConfigError(f"scale_step must be > 1, got {self.scale_step}")
        for name in ("t1", "t2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        for name in ("eta", "eta1", "eta2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.update_interval < 1:
            raise ConfigError("update_interval must be >= 1")
        if self.codebook_k < 1 or self.knn_r < 1:
            raise ConfigError("codebook_k and knn_r must be >= 1")
        if self.padding < 0:
            raise ConfigError("padding must be >= 0")
        self.solver.validate()
        return self

    def with_ablations(self, names):
        """Copy of the config with the named ablation switches enabled."""
        flags = {}
        mapping = {
            "noJL": "no_joint_learning",
            "noL": "no_laplacian",
            "noTR": "no_redetection",
            "noSH": "no_scale",
        }
        for name in names:
            if name not in mapping:
                raise ConfigError(
                    f"unknown ablation {name!r}; expected one of {ABLATIONS}"
                )
            flags[mapping[name]] = True
        return replace(self, **flags)


class LayerState:
    """Fixed grid, labels, codebook and running model of one feature layer."""

    def __init__(self, spec, cfg, index):
        self.spec = spec
        self.index = index
        side = cfg.window_px // spec.cell
        self.grid = (side, side)
        # label bandwidth follows the target footprint in cells, not the
        # window grid, so all layers peak equally sharply in image pixels
        target_cells = cfg.window_px / (1.0 + cfg.padding) / spec.cell
        self.labels = gaussian_labels(self.grid, cfg.sigma_factor * target_cells)
        self.window = hann_window(self.grid)
        self.raw = cfg.no_joint_learning and cfg.no_laplacian
        self.codebook = None
        self.model = None

    def extract(self, gray, bbox, cfg):
        return _normalized(
            features.extract_features(gray, bbox, self.spec, cfg.padding, cfg.window_px)
        )

    def detection_codes(self, stack):
        """Cheap per-frame coding, rescaled to the running template's energy.

        The template is an average of solver outputs, whose scale depends
        on the codebook geometry; matching the energy keeps response
        amplitudes calibrated against the confidence thresholds.
        """
        if self.raw:
            return stack
        z = self.codebook.encode_lsq(stack.reshape(stack.shape[0], -1))
        z = z.reshape(self.codebook.k, *self.grid)
        if self.model is not None:
            m, n = self.grid
            template_rms = np.sqrt(
                np.mean(np.abs(self.model.template_hat) ** 2) / (m * n)
            )
            z_rms = float(np.sqrt(np.mean(z**2)))
            if z_rms > 1e-12:
                z = z * (template_rms / z_rms)
        return z


class Tracker:
    """Owns all per-sequence state; one instance per sequence."""

    def __init__(self, cfg):
        self.cfg = cfg.validate()
        self.layers = [LayerState(s, cfg, i) for i, s in enumerate(cfg.layers)]
        finest = max(range(len(self.layers)), key=lambda i: self.layers[i].grid[0])
        self.finest = finest
        self.appearance = None
        self.scale_model = None
        self.bbox = None
        self.frame_index = 0
        self.last_score = 1.0
        self.frame_shape = None

    # -- feature helpers -------------------------------------------------

    def _hog_patch(self, gray, bbox, padding, canvas, cell):
        spec = features.LayerSpec("hog", cell, 1.0)
        return _normalized(features.extract_features(gray, bbox, spec, padding, canvas))

    def _train_layer(self, layer, gray, bbox):
        """Solve codes+filter for one layer at a box.

        Returns the trained sample codes (the representation the filter
        was fit to) and the filter; both feed the model update.
        """
        cfg = self.cfg
        stack = layer.extract(gray, bbox, cfg)
        if layer.raw:
            filt = dcf.dcf_train(stack, layer.labels, layer.window, cfg.solver.lam)
            return stack, filt
        X = stack.reshape(stack.shape[0], -1)
        graph = None
        if not cfg.no_laplacian:
            graph = build_laplacian(X, cfg.knn_r)
        if cfg.no_joint_learning:
            gamma = 0.0 if cfg.no_laplacian else cfg.solver.gamma
            Z = laplacian_encode(X, layer.codebook, graph, gamma)
            filt = dcf.dcf_train(
                Z.reshape(-1, *layer.grid), layer.labels, layer.window, cfg.solver.lam
            )
        else:
            scfg = cfg.solver
            if cfg.no_laplacian:
                scfg = replace(scfg, gamma=0.0)
            sol = joint_solve(
                X, layer.codebook.atoms, graph, layer.labels, layer.window, scfg
            )
            filt = sol.filter
            Z = sol.Z
        return Z.reshape(-1, *layer.grid), filt

    # -- lifecycle -------------------------------------------------------

    def init(self, frame, bb0):
        """Build codebooks, solve the first models, set the initial box."""
        cfg = self.cfg
        gray = features.to_gray(frame)
        self.frame_shape = gray.shape
        notes = []
        if cfg.no_joint_learning:
            notes.append("joint learning disabled")
        if cfg.no_laplacian:
            notes.append("graph regularization disabled")
        if cfg.no_redetection:
            notes.append("re-detection disabled")
        if cfg.no_scale:
            notes.append("scale handling disabled")
        for layer in self.layers:
            stack = layer.extract(gray, bb0, cfg)
            if not layer.raw:
                layer.codebook = learn_codebook(
                    stack.reshape(stack.shape[0], -1),
                    cfg.codebook_k,
                    iters=cfg.codebook_iters,
                    seed=cfg.seed + layer.index,
                )
            codes, filt = self._train_layer(layer, gray, bb0)
            layer.model = dcf.make_model(codes, filt, cfg.solver.lam)
        app = self._hog_patch(
            gray, bb0, cfg.redetect_padding, cfg.redetect_px, cfg.redetect_cell
        )
        grid = app.shape[1:]
        sigma = cfg.sigma_factor * cfg.redetect_px / (1 + cfg.redetect_padding)
        self._app_labels = gaussian_labels(grid, sigma / cfg.redetect_cell)
        self._app_window = hann_window(grid)
        filt = dcf.dcf_train(app, self._app_labels, self._app_window, cfg.solver.lam)
        self.appearance = dcf.make_model(app, filt, cfg.solver.lam)
        sc = self._hog_patch(gray, bb0, 0.0, cfg.scale_px, cfg.scale_cell)
        grid = sc.shape[1:]
        self._scale_labels = gaussian_labels(
            grid, cfg.sigma_factor * cfg.scale_px / cfg.scale_cell
        )
        self._scale_window = hann_window(grid)
        filt = dcf.dcf_train(sc, self._scale_labels, self._scale_window, cfg.solver.lam)
        self.scale_model = dcf.make_model(sc, filt, cfg.solver.lam)
        self.bbox = bb0
        self.frame_index = 0
        self.last_score = 1.0
        return {"frame": 0, "score": 1.0, "notes": notes}

    def _fuse(self, responses):
        """Weighted mean of the layer responses on the finest grid.

        Maps are unwrapped (peak to center) before resampling so bilinear
        interpolation never crosses the circular boundary, then wrapped
        back. Weights are normalized, so a common rescaling of all layer
        weights leaves both the argmax and the score unchanged.
        """
        ref_grid = self.layers[self.finest].grid
        total = np.zeros(ref_grid)
        weight_sum = 0.0
        for layer, resp in zip(self.layers, responses):
            shifted = np.fft.fftshift(resp)
            if layer.grid != ref_grid:
                sy = layer.grid[0] / ref_grid[0]
                sx = layer.grid[1] / ref_grid[1]
                coords = np.meshgrid(
                    np.arange(ref_grid[0]) * sy,
                    np.arange(ref_grid[1]) * sx,
                    indexing="ij",
                )
                shifted = ndimage.map_coordinates(
                    shifted, coords, order=1, mode="nearest"
                )
            total += layer.spec.weight * shifted
            weight_sum += layer.spec.weight
        return np.fft.ifftshift(total / weight_sum)

    def _clamp_center(self, cx, cy):
        h, w = self.frame_shape
        return float(np.clip(cx, 0.0, w - 1.0)), float(np.clip(cy, 0.0, h - 1.0))

    def track_frame(self, frame):
        """Process one frame; returns (box, confidence, diagnostics)."""
        cfg = self.cfg
        gray = features.to_gray(frame)
        self.frame_index += 1
        diag = {"frame": self.frame_index, "notes": []}

        # localization from the cached models
        responses = []
        for layer in self.layers:
            stack = layer.extract(gray, self.bbox, cfg)
            codes = layer.detection_codes(stack)
            responses.append(dcf.response_map(layer.model, codes, layer.window))
        fused = self._fuse(responses)
        dy, dx, score = dcf.localize(fused)
        cell = self.layers[self.finest].spec.cell
        sy, sx = features.window_scale(self.bbox, cfg.padding, cfg.window_px)
        cx, cy = self._clamp_center(
            self.bbox.cx + dx * cell * sx, self.bbox.cy + dy * cell * sy
        )
        self.bbox = self.bbox.moved_to(cx, cy)
        self.last_score = score
        diag.update(score=score, dy=dy, dx=dx)

        # cadenced model update at the new position
        if self.frame_index % cfg.update_interval == 0:
            try:
                for layer in self.layers:
                    codes, filt = self._train_layer(layer, gray, self.bbox)
                    layer.model = dcf.update_model(layer.model, codes, filt, cfg.eta)
                diag["updated"] = True
            except NonFinite:
                diag["updated"] = False
                diag["solver_fallback"] = True

        # confidence-gated whole-frame re-detection
        if score < cfg.t1 and not cfg.no_redetection:
            diag["redetect_triggered"] = True
            recovered = self.redetect(gray)
            if recovered is not None:
                self.bbox = recovered
                diag["redetect_accepted"] = True

        # scale estimation around the localized center
        if not cfg.no_scale:
            self.bbox = self.scale_estimate(gray, self.bbox, diag)

        return self.bbox, score, diag

    # -- recovery and scale ----------------------------------------------

    def _appearance_score(self, gray, box):
        stack = self._hog_patch(
            gray, box, self.cfg.redetect_padding, self.cfg.redetect_px,
            self.cfg.redetect_cell,
        )
        resp = dcf.response_map(self.appearance, stack, self._app_window)
        dy, dx, score = dcf.localize(resp)
        sy, sx = features.window_scale(box, self.cfg.redetect_padding, self.cfg.redetect_px)
        cx = box.cx + dx * self.cfg.redetect_cell * sx
        cy = box.cy + dy * self.cfg.redetect_cell * sy
        return score, self._clamp_center(cx, cy)

    def redetect(self, gray):
        """Sliding-window search of the whole frame with the appearance filter.

        Returns the refined best proposal if its score clears the
        acceptance threshold, else None (no state change).
        """
        cfg = self.cfg
        h, w = gray.shape
        stride_x = max(1, int(round(cfg.proposal_stride * self.bbox.w)))
        stride_y = max(1, int(round(cfg.proposal_stride * self.bbox.h)))
        best = (-np.inf, None)
        for factor in cfg.proposal_scales:
            pw, ph = self.bbox.w * factor, self.bbox.h * factor
            if pw > w or ph > h:
                continue
            xs = list(np.arange(0.0, w - pw + 1e-9, stride_x)) or [0.0]
            ys = list(np.arange(0.0, h - ph + 1e-9, stride_y)) or [0.0]
            if xs[-1] < w - pw:
                xs.append(w - pw)
            if ys[-1] < h - ph:
                ys.append(h - ph)
            for y0 in ys:
                for x0 in xs:
                    box = BBox(x0, y0, pw, ph)
                    score, (cx, cy) = self._appearance_score(gray, box)
                    if score > best[0]:
                        best = (score, box.moved_to(cx, cy))
        score, box = best
        if box is None or score <= cfg.t2:
            return None
        app = self._hog_patch(
            gray, box, cfg.redetect_padding, cfg.redetect_px, cfg.redetect_cell
        )
        filt = dcf.dcf_train(app, self._app_labels, self._app_window, cfg.solver.lam)
        self.appearance = dcf.update_model(self.appearance, app, filt, cfg.eta2)
        return box

    def scale_estimate(self, gray, box, diag=None):
        """Score a pyramid of rescaled crops and adopt the best-scoring one.

        The box follows the pyramid argmax every frame (the current scale
        is part of the pyramid, so "no change" wins unless a rescaled crop
        genuinely explains the patch better); the scale model itself is
        updated conservatively, only when the pyramid score also beats the
        translation confidence.
        """
        cfg = self.cfg
        h, w = gray.shape
        half = (cfg.scale_count - 1) // 2
        scores = {}
        for power in range(-half, half + 1):
            factor = cfg.scale_step**power
            cand = box.scaled(factor)
            if min(cand.w, cand.h) < 8 or max(cand.w, cand.h) > min(h, w):
                continue
            stack = self._hog_patch(gray, cand, 0.0, cfg.scale_px, cfg.scale_cell)
            resp = dcf.response_map(self.scale_model, stack, self._scale_window)
            scores[power] = float(resp.max())
        if not scores:
            return box
        peak = max(scores, key=lambda p: (scores[p], -abs(p)))
        score = scores[peak]
        # parabolic sub-step refinement over the log-scale lattice
        frac = 0.0
        if peak - 1 in scores and peak + 1 in scores:
            lo, mid, hi = scores[peak - 1], scores[peak], scores[peak + 1]
            denom = lo - 2.0 * mid + hi
            if denom < 0:
                frac = float(np.clip(0.5 * (lo - hi) / denom, -0.5, 0.5))
        factor = cfg.scale_step ** (peak + frac)
        adopted = box if factor == 1.0 else box.scaled(factor)
        if score > self.last_score:
            stack = self._hog_patch(gray, adopted, 0.0, cfg.scale_px, cfg.scale_cell)
            filt = dcf.dcf_train(
                stack, self._scale_labels, self._scale_window, cfg.solver.lam
            )
            self.scale_model = dcf.update_model(self.scale_model, stack, filt, cfg.eta1)
        if diag is not None and factor != 1.0:
            diag["scale_adopted"] = factor
        return adopted


def run_sequence(frames, bb0, cfg):
    """Track a full sequence; returns per-frame (box, score, diagnostics).

    A frame never aborts the run: solver failures fall back to the cached
    models and are flagged in the diagnostics.
    """
    tracker = Tracker(cfg)
    diag0 = tracker.init(frames[0], bb0)
    results = [(bb0, 1.0, diag0)]
    for frame in frames[1:]:
        results.append(tracker.track_frame(frame))
    return results
