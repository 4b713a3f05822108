"""Jitted inner loops for extrema scanning, keypoint refinement, orientation
histograms, and descriptor accumulation.  Kept free of fastmath and parallel
execution so results are bit-reproducible across runs and worker counts."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def strict_extrema(dog, prelim, border):
    """Coordinates (layer, row, col) of strict 26-neighbor extrema of the
    DoG stack whose magnitude exceeds the preliminary contrast bound.
    Only interior layers and pixels at least ``border`` from the edges are
    eligible; plateaus never qualify."""
    n_layers, n_rows, n_cols = dog.shape
    coords = []
    for layer in range(1, n_layers - 1):
        for row in range(border, n_rows - border):
            for col in range(border, n_cols - border):
                v = dog[layer, row, col]
                if abs(v) <= prelim:
                    continue
                is_max = True
                is_min = True
                for dl in range(-1, 2):
                    for dr in range(-1, 2):
                        for dc in range(-1, 2):
                            if dl == 0 and dr == 0 and dc == 0:
                                continue
                            nbr = dog[layer + dl, row + dr, col + dc]
                            if v <= nbr:
                                is_max = False
                            if v >= nbr:
                                is_min = False
                        if not (is_max or is_min):
                            break
                    if not (is_max or is_min):
                        break
                if is_max or is_min:
                    coords.append((layer, row, col))
    out = np.empty((len(coords), 3), dtype=np.int64)
    for i, (layer, row, col) in enumerate(coords):
        out[i, 0] = layer
        out[i, 1] = row
        out[i, 2] = col
    return out


@njit(cache=True)
def normalize_clamped_batch(raw, clamp):
    """Unit-normalize rows with component clamping, iterated to a fixed
    point so each returned row is unit length with every component <= clamp.
    Rows whose mass is too concentrated to satisfy both are zeroed."""
    n, width = raw.shape
    out = np.zeros((n, width))
    v = np.empty(width)
    for i in range(n):
        for j in range(width):
            v[j] = raw[i, j]
        ok = False
        for _ in range(64):
            norm_sq = 0.0
            for j in range(width):
                norm_sq += v[j] * v[j]
            norm = math.sqrt(norm_sq)
            if norm < 1e-12:
                break
            clipped = False
            for j in range(width):
                v[j] /= norm
                if v[j] > clamp:
                    v[j] = clamp
                    clipped = True
            if not clipped:
                ok = True
                break
        if ok:
            for j in range(width):
                out[i, j] = v[j]
    return out


@njit(cache=True)
def refine_candidates(dog, coords, border, max_steps, contrast_thr, edge_ratio):
    """Iterated quadratic refinement of DoG extrema.

    coords holds (layer, row, col) integer seeds.  Returns an (n, 4) array
    of (layer_f, row_f, col_f, contrast) with a parallel keep mask; the
    contrast and principal-curvature tests are applied here.
    """
    n = coords.shape[0]
    n_layers, n_rows, n_cols = dog.shape
    out = np.zeros((n, 4))
    keep = np.zeros(n, dtype=np.bool_)
    for idx in range(n):
        layer = int(coords[idx, 0])
        row = int(coords[idx, 1])
        col = int(coords[idx, 2])
        converged = False
        ox = 0.0
        oy = 0.0
        os_ = 0.0
        v = 0.0
        gx = 0.0
        gy = 0.0
        gs = 0.0
        dxx = 0.0
        dyy = 0.0
        dxy = 0.0
        for _ in range(max_steps):
            v = dog[layer, row, col]
            gx = 0.5 * (dog[layer, row, col + 1] - dog[layer, row, col - 1])
            gy = 0.5 * (dog[layer, row + 1, col] - dog[layer, row - 1, col])
            gs = 0.5 * (dog[layer + 1, row, col] - dog[layer - 1, row, col])
            dxx = dog[layer, row, col + 1] + dog[layer, row, col - 1] - 2.0 * v
            dyy = dog[layer, row + 1, col] + dog[layer, row - 1, col] - 2.0 * v
            dss = dog[layer + 1, row, col] + dog[layer - 1, row, col] - 2.0 * v
            dxy = 0.25 * (
                dog[layer, row + 1, col + 1]
                - dog[layer, row + 1, col - 1]
                - dog[layer, row - 1, col + 1]
                + dog[layer, row - 1, col - 1]
            )
            dxs = 0.25 * (
                dog[layer + 1, row, col + 1]
                - dog[layer + 1, row, col - 1]
                - dog[layer - 1, row, col + 1]
                + dog[layer - 1, row, col - 1]
            )
            dys = 0.25 * (
                dog[layer + 1, row + 1, col]
                - dog[layer + 1, row - 1, col]
                - dog[layer - 1, row + 1, col]
                + dog[layer - 1, row - 1, col]
            )
            # Solve H @ offset = -grad for the symmetric 3x3 Hessian via the
            # adjugate; a vanishing determinant means no stable fit.
            a11, a12, a13 = dxx, dxy, dxs
            a22, a23 = dyy, dys
            a33 = dss
            c11 = a22 * a33 - a23 * a23
            c12 = a13 * a23 - a12 * a33
            c13 = a12 * a23 - a13 * a22
            det = a11 * c11 + a12 * c12 + a13 * c13
            if det == 0.0:
                break
            c22 = a11 * a33 - a13 * a13
            c23 = a12 * a13 - a11 * a23
            c33 = a11 * a22 - a12 * a12
            ox = -(c11 * gx + c12 * gy + c13 * gs) / det
            oy = -(c12 * gx + c22 * gy + c23 * gs) / det
            os_ = -(c13 * gx + c23 * gy + c33 * gs) / det
            if abs(ox) < 0.5 and abs(oy) < 0.5 and abs(os_) < 0.5:
                converged = True
                break
            col += int(round(ox))
            row += int(round(oy))
            layer += int(round(os_))
            if (
                layer < 1
                or layer > n_layers - 2
                or row < border
                or row > n_rows - 1 - border
                or col < border
                or col > n_cols - 1 - border
            ):
                break
        if not converged:
            continue
        contrast = v + 0.5 * (gx * ox + gy * oy + gs * os_)
        if abs(contrast) < contrast_thr:
            continue
        trace = dxx + dyy
        det2 = dxx * dyy - dxy * dxy
        if det2 <= 0.0 or trace * trace * edge_ratio >= (edge_ratio + 1.0) ** 2 * det2:
            continue
        out[idx, 0] = layer + os_
        out[idx, 1] = row + oy
        out[idx, 2] = col + ox
        out[idx, 3] = contrast
        keep[idx] = True
    return out, keep


@njit(cache=True)
def orientation_histograms(mag, ang, rows, cols, sigmas, nbins, sigma_factor, radius_factor):
    """Gradient-orientation histograms for candidates sharing one pyramid
    level.  Samples a square window of radius round(radius_factor * sigma_w)
    clipped to the gradient interior, weighted by magnitude and an isotropic
    Gaussian of width sigma_w.  mag/ang are the precomputed polar gradients
    of the level."""
    n = rows.shape[0]
    n_rows, n_cols = mag.shape
    hists = np.zeros((n, nbins))
    two_pi = np.float32(2.0 * math.pi)
    for k in range(n):
        sigma_w = sigma_factor * sigmas[k]
        radius = int(round(radius_factor * sigma_w))
        rc = int(round(rows[k]))
        cc = int(round(cols[k]))
        r0 = max(rc - radius, 1)
        r1 = min(rc + radius, n_rows - 2)
        c0 = max(cc - radius, 1)
        c1 = min(cc + radius, n_cols - 2)
        if r0 > r1 or c0 > c1:
            continue
        inv_two_sig2 = np.float32(1.0 / (2.0 * sigma_w * sigma_w))
        bin_scale = np.float32(nbins) / two_pi
        row_f = np.float32(rows[k])
        col_f = np.float32(cols[k])
        for r in range(r0, r1 + 1):
            dr = np.float32(r) - row_f
            for c in range(c0, c1 + 1):
                m = mag[r, c]
                if m == np.float32(0.0):
                    continue
                dc = np.float32(c) - col_f
                b = int(ang[r, c] * bin_scale) % nbins
                hists[k, b] += m * np.exp(-(dr * dr + dc * dc) * inv_two_sig2)
    return hists


@njit(cache=True)
def descriptor_histograms(mag, ang, rows, cols, sigmas, orientations, d, nbins, cell_factor):
    """Trilinearly binned gradient histograms for keypoints sharing one
    pyramid level.  Returns (n, d*d*nbins) vectors before normalization."""
    n = rows.shape[0]
    n_rows, n_cols = mag.shape
    out = np.zeros((n, d * d * nbins), dtype=np.float32)
    two_pi = np.float32(2.0 * math.pi)
    one = np.float32(1.0)
    max_radius = int(math.hypot(n_rows, n_cols))
    hist = np.zeros((d + 2, d + 2, nbins), dtype=np.float32)
    for k in range(n):
        cell_width = cell_factor * sigmas[k]
        radius = int(round(cell_width * math.sqrt(2.0) * (d + 1) * 0.5))
        if radius > max_radius:
            radius = max_radius
        rc = int(round(rows[k]))
        cc = int(round(cols[k]))
        r0 = max(rc - radius, 1)
        r1 = min(rc + radius, n_rows - 2)
        c0 = max(cc - radius, 1)
        c1 = min(cc + radius, n_cols - 2)
        if r0 > r1 or c0 > c1:
            continue
        cos_a = np.float32(math.cos(orientations[k]))
        sin_a = np.float32(math.sin(orientations[k]))
        ori = np.float32(orientations[k])
        inv_cell = np.float32(1.0 / cell_width)
        weight_denom = np.float32(1.0 / (2.0 * (0.5 * d * cell_width) ** 2))
        obin_scale = np.float32(nbins) / two_pi
        half_d = np.float32(0.5 * d - 0.5)
        d_f = np.float32(d)
        minus_one = np.float32(-1.0)
        row_f = np.float32(rows[k])
        col_f = np.float32(cols[k])
        hist[:, :, :] = np.float32(0.0)
        for r in range(r0, r1 + 1):
            dr = np.float32(r) - row_f
            for c in range(c0, c1 + 1):
                dc = np.float32(c) - col_f
                col_rot = dc * cos_a + dr * sin_a
                row_rot = -dc * sin_a + dr * cos_a
                rbin = row_rot * inv_cell + half_d
                if rbin <= minus_one or rbin >= d_f:
                    continue
                cbin = col_rot * inv_cell + half_d
                if cbin <= minus_one or cbin >= d_f:
                    continue
                m = mag[r, c]
                if m == np.float32(0.0):
                    continue
                theta = (ang[r, c] - ori) % two_pi
                obin = theta * obin_scale
                w = m * np.exp(-(row_rot * row_rot + col_rot * col_rot) * weight_denom)
                rb = int(math.floor(rbin))
                cb = int(math.floor(cbin))
                ob = int(math.floor(obin))
                rf = rbin - np.float32(rb)
                cf = cbin - np.float32(cb)
                of = obin - np.float32(ob)
                w_r1 = w * rf
                w_r0 = w - w_r1
                w_r1c1 = w_r1 * cf
                w_r1c0 = w_r1 - w_r1c1
                w_r0c1 = w_r0 * cf
                w_r0c0 = w_r0 - w_r0c1
                o0 = ob % nbins
                o1 = (ob + 1) % nbins
                of0 = one - of
                hist[rb + 1, cb + 1, o0] += w_r0c0 * of0
                hist[rb + 1, cb + 1, o1] += w_r0c0 * of
                hist[rb + 1, cb + 2, o0] += w_r0c1 * of0
                hist[rb + 1, cb + 2, o1] += w_r0c1 * of
                hist[rb + 2, cb + 1, o0] += w_r1c0 * of0
                hist[rb + 2, cb + 1, o1] += w_r1c0 * of
                hist[rb + 2, cb + 2, o0] += w_r1c1 * of0
                hist[rb + 2, cb + 2, o1] += w_r1c1 * of
        out[k] = hist[1:-1, 1:-1, :].copy().reshape(d * d * nbins)
    return out
