"""Compiled numeric kernels (numba, nogil) shared by features and the planner.

Scenario geometry arrives as flat float64 arrays (see ScenarioArrays):
  rects  (R,4) x_min,y_min,x_max,y_max
  segs   (S,5) x1,y1,x2,y2,half_width  (capsule obstacles)
  discs  (P,3) x,y,radius              (people bodies)
  people (P,4) x,y,cos(theta),sin(theta)

Cost providers are encoded by `mode`:
  0  linear feature cost           1 + w . f(x)
  1  prediction grid cost          1 + gain * (1 - p(x)), p bilinear in [0,1]
  2  corridor-discounted features  max(floor, 1 + w . f(x) - lam * in_corridor)

fparams (10): goal_x, goal_y, d_max, sigma_obstacle,
              front sx, front sy, back sx, back sy, side sx, side sy
gparams (8):  resolution, origin_x, origin_y, frame_x, frame_y,
              frame_cos, frame_sin, gain
lparams (3):  corridor_radius, loss_weight, cost_floor
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

INF = math.inf


# ---------------------------------------------------------------------------
# geometry primitives


@njit(cache=True, nogil=True)
def _pt_seg_dist2(px, py, x1, y1, x2, y2):
    dx = x2 - x1
    dy = y2 - y1
    denom = dx * dx + dy * dy
    t = ((px - x1) * dx + (py - y1) * dy) / denom
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    cx = x1 + t * dx
    cy = y1 + t * dy
    return (px - cx) ** 2 + (py - cy) ** 2


@njit(cache=True, nogil=True)
def _seg_seg_dist2(p1x, p1y, p2x, p2y, q1x, q1y, q2x, q2y):
    # closest-approach distance of two segments (Ericson, real-time collision)
    d1x = p2x - p1x
    d1y = p2y - p1y
    d2x = q2x - q1x
    d2y = q2y - q1y
    rx = p1x - q1x
    ry = p1y - q1y
    a = d1x * d1x + d1y * d1y
    e = d2x * d2x + d2y * d2y
    f = d2x * rx + d2y * ry
    if a <= 1e-30 and e <= 1e-30:
        return rx * rx + ry * ry
    if a <= 1e-30:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        c = d1x * rx + d1y * ry
        if e <= 1e-30:
            t = 0.0
            s = min(1.0, max(0.0, -c / a))
        else:
            b = d1x * d2x + d1y * d2y
            denom = a * e - b * b
            if denom > 1e-30:
                s = min(1.0, max(0.0, (b * f - c * e) / denom))
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    cx = p1x + s * d1x - (q1x + t * d2x)
    cy = p1y + s * d1y - (q1y + t * d2y)
    return cx * cx + cy * cy


@njit(cache=True, nogil=True)
def _seg_hits_rect(ax, ay, bx, by, xmin, ymin, xmax, ymax):
    # Liang-Barsky clip; touching counts as a hit
    dx = bx - ax
    dy = by - ay
    t0 = 0.0
    t1 = 1.0
    for k in range(4):
        if k == 0:
            p = -dx
            q = ax - xmin
        elif k == 1:
            p = dx
            q = xmax - ax
        elif k == 2:
            p = -dy
            q = ay - ymin
        else:
            p = dy
            q = ymax - ay
        if p == 0.0:
            if q < 0.0:
                return False
        else:
            t = q / p
            if p < 0.0:
                if t > t0:
                    t0 = t
            else:
                if t < t1:
                    t1 = t
            if t0 > t1:
                return False
    return True


@njit(cache=True, nogil=True)
def point_in_collision(x, y, rects, segs, discs):
    for i in range(rects.shape[0]):
        if rects[i, 0] <= x <= rects[i, 2] and rects[i, 1] <= y <= rects[i, 3]:
            return True
    for i in range(segs.shape[0]):
        if _pt_seg_dist2(x, y, segs[i, 0], segs[i, 1], segs[i, 2], segs[i, 3]) <= segs[i, 4] ** 2:
            return True
    for i in range(discs.shape[0]):
        if (x - discs[i, 0]) ** 2 + (y - discs[i, 1]) ** 2 <= discs[i, 2] ** 2:
            return True
    return False


@njit(cache=True, nogil=True)
def segment_in_collision(ax, ay, bx, by, rects, segs, discs):
    for i in range(rects.shape[0]):
        if _seg_hits_rect(ax, ay, bx, by, rects[i, 0], rects[i, 1], rects[i, 2], rects[i, 3]):
            return True
    for i in range(segs.shape[0]):
        d2 = _seg_seg_dist2(ax, ay, bx, by, segs[i, 0], segs[i, 1], segs[i, 2], segs[i, 3])
        if d2 <= segs[i, 4] ** 2:
            return True
    for i in range(discs.shape[0]):
        if _pt_seg_dist2(discs[i, 0], discs[i, 1], ax, ay, bx, by) <= discs[i, 2] ** 2:
            return True
    return False


@njit(cache=True, nogil=True)
def obstacle_clearance(x, y, rects, segs):
    """Distance to the closest static obstacle surface; inf when none exist."""
    best = INF
    for i in range(rects.shape[0]):
        dx = max(rects[i, 0] - x, 0.0, x - rects[i, 2])
        dy = max(rects[i, 1] - y, 0.0, y - rects[i, 3])
        d = math.hypot(dx, dy)
        if d < best:
            best = d
    for i in range(segs.shape[0]):
        d = math.sqrt(_pt_seg_dist2(x, y, segs[i, 0], segs[i, 1], segs[i, 2], segs[i, 3]))
        d = max(0.0, d - segs[i, 4])
        if d < best:
            best = d
    return best


@njit(cache=True, nogil=True)
def dist_to_polyline2(x, y, pts):
    if pts.shape[0] == 1:
        return (x - pts[0, 0]) ** 2 + (y - pts[0, 1]) ** 2
    best = INF
    for i in range(pts.shape[0] - 1):
        d2 = _pt_seg_dist2(x, y, pts[i, 0], pts[i, 1], pts[i + 1, 0], pts[i + 1, 1])
        if d2 < best:
            best = d2
    return best


# ---------------------------------------------------------------------------
# social-navigation features


@njit(cache=True, nogil=True)
def feature5(x, y, fparams, people, rects, segs):
    """The five features at one point, each clamped to [0, 1]."""
    gd = math.hypot(x - fparams[0], y - fparams[1]) / fparams[2]
    if gd > 1.0:
        gd = 1.0

    if rects.shape[0] == 0 and segs.shape[0] == 0:
        obst = 0.0
    else:
        d = obstacle_clearance(x, y, rects, segs)
        obst = math.exp(-(d * d) / (2.0 * fparams[3] * fparams[3]))

    front = 0.0
    back = 0.0
    side = 0.0
    for i in range(people.shape[0]):
        dx = x - people[i, 0]
        dy = y - people[i, 1]
        c = people[i, 2]
        s = people[i, 3]
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        if lx >= 0.0:
            v = math.exp(-(lx * lx) / (2.0 * fparams[4] * fparams[4])
                         - (ly * ly) / (2.0 * fparams[5] * fparams[5]))
            if v > front:
                front = v
        if lx <= 0.0:
            v = math.exp(-(lx * lx) / (2.0 * fparams[6] * fparams[6])
                         - (ly * ly) / (2.0 * fparams[7] * fparams[7]))
            if v > back:
                back = v
        v = math.exp(-(lx * lx) / (2.0 * fparams[8] * fparams[8])
                     - (ly * ly) / (2.0 * fparams[9] * fparams[9]))
        if v > side:
            side = v
    return gd, obst, front, back, side


@njit(cache=True, nogil=True)
def features_batch(pts, fparams, people, rects, segs):
    out = np.empty((pts.shape[0], 5))
    for i in range(pts.shape[0]):
        f0, f1, f2, f3, f4 = feature5(pts[i, 0], pts[i, 1], fparams, people, rects, segs)
        out[i, 0] = f0
        out[i, 1] = f1
        out[i, 2] = f2
        out[i, 3] = f3
        out[i, 4] = f4
    return out


@njit(cache=True, nogil=True)
def bilinear_grid_value(gridvals, gparams, x, y):
    """Sample a grid (robot-frame raster) at a world point; clamped to [0,1]."""
    res = gparams[0]
    dx = x - gparams[3]
    dy = y - gparams[4]
    c = gparams[5]
    s = gparams[6]
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    u = (lx - gparams[1]) / res
    v = (ly - gparams[2]) / res
    w = gridvals.shape[1]
    h = gridvals.shape[0]
    if u < 0.0:
        u = 0.0
    elif u > w - 1.0:
        u = w - 1.0
    if v < 0.0:
        v = 0.0
    elif v > h - 1.0:
        v = h - 1.0
    u0 = int(u)
    v0 = int(v)
    if u0 > w - 2:
        u0 = w - 2
    if v0 > h - 2:
        v0 = h - 2
    fu = u - u0
    fv = v - v0
    p = ((1.0 - fu) * (1.0 - fv) * gridvals[v0, u0]
         + fu * (1.0 - fv) * gridvals[v0, u0 + 1]
         + (1.0 - fu) * fv * gridvals[v0 + 1, u0]
         + fu * fv * gridvals[v0 + 1, u0 + 1])
    if p < 0.0:
        p = 0.0
    elif p > 1.0:
        p = 1.0
    return p


@njit(cache=True, nogil=True)
def state_cost(mode, x, y, weights, fparams, people,
               gridvals, gparams, expert, lparams, rects, segs, discs):
    if point_in_collision(x, y, rects, segs, discs):
        return INF
    if mode == 1:
        p = bilinear_grid_value(gridvals, gparams, x, y)
        return 1.0 + gparams[7] * (1.0 - p)
    f0, f1, f2, f3, f4 = feature5(x, y, fparams, people, rects, segs)
    c = 1.0 + (weights[0] * f0 + weights[1] * f1 + weights[2] * f2
               + weights[3] * f3 + weights[4] * f4)
    if mode == 2:
        if dist_to_polyline2(x, y, expert) <= lparams[0] ** 2:
            c -= lparams[1]
        if c < lparams[2]:
            c = lparams[2]
    return c


@njit(cache=True, nogil=True)
def edge_cost(mode, ax, ay, bx, by, step, weights, fparams, people,
              gridvals, gparams, expert, lparams, rects, segs, discs):
    """Trapezoidal line integral of state_cost; inf if the segment collides."""
    if segment_in_collision(ax, ay, bx, by, rects, segs, discs):
        return INF
    length = math.hypot(bx - ax, by - ay)
    if length == 0.0:
        return 0.0
    n = int(math.ceil(length / step - 1e-12))
    if n < 1:
        n = 1
    ds = length / n
    total = 0.0
    c_prev = state_cost(mode, ax, ay, weights, fparams, people,
                        gridvals, gparams, expert, lparams, rects, segs, discs)
    for i in range(1, n + 1):
        t = i / n
        cx = ax + t * (bx - ax)
        cy = ay + t * (by - ay)
        c_i = state_cost(mode, cx, cy, weights, fparams, people,
                         gridvals, gparams, expert, lparams, rects, segs, discs)
        total += 0.5 * (c_prev + c_i) * ds
        c_prev = c_i
    return total


# ---------------------------------------------------------------------------
# RRT* core


@njit(cache=True, nogil=True)
def _add_child(p, c, first_child, next_sib, prev_sib):
    next_sib[c] = first_child[p]
    prev_sib[c] = -1
    if first_child[p] != -1:
        prev_sib[first_child[p]] = c
    first_child[p] = c


@njit(cache=True, nogil=True)
def _remove_child(p, c, first_child, next_sib, prev_sib):
    if prev_sib[c] == -1:
        first_child[p] = next_sib[c]
    else:
        next_sib[prev_sib[c]] = next_sib[c]
    if next_sib[c] != -1:
        prev_sib[next_sib[c]] = prev_sib[c]


@njit(cache=True, nogil=True)
def plan_core(nodes, parent, cost, first_child, next_sib, prev_sib, near_goal,
              state, it0, it1, uniforms,
              goal_x, goal_y, goal_tol, win, steer_step, gamma, cost_step,
              bias_fraction, bias_cdf, bias_pix, sparams, grid_w,
              mode, weights, fparams, people, gridvals, gparams, expert, lparams,
              rects, segs, discs, stack):
    """Run RRT* iterations [it0, it1); tree arrays are updated in place.

    state[0] = node count, state[1] = biased-draw count. Iteration `it`
    consumes uniforms[it] regardless of outcome, so chunked execution is
    byte-identical to a single run.
    """
    n_nodes = state[0]
    n_biased = state[1]
    n_bias_pix = bias_cdf.shape[0]
    for it in range(it0, it1):
        u0 = uniforms[it, 0]
        u1 = uniforms[it, 1]
        u2 = uniforms[it, 2]
        u3 = uniforms[it, 3]
        if n_bias_pix > 0 and u0 < bias_fraction:
            j = np.searchsorted(bias_cdf, u1, side="right")
            if j >= n_bias_pix:
                j = n_bias_pix - 1
            pidx = bias_pix[j]
            py = pidx // grid_w
            px = pidx - py * grid_w
            lx = sparams[1] + (px + (u2 - 0.5)) * sparams[0]
            ly = sparams[2] + (py + (u3 - 0.5)) * sparams[0]
            rx = sparams[3] + sparams[5] * lx - sparams[6] * ly
            ry = sparams[4] + sparams[6] * lx + sparams[5] * ly
            n_biased += 1
        else:
            lx = (2.0 * u1 - 1.0) * win[2]
            ly = (2.0 * u2 - 1.0) * win[2]
            rx = win[0] + win[3] * lx - win[4] * ly
            ry = win[1] + win[4] * lx + win[3] * ly

        # nearest node (Euclidean)
        best_d2 = INF
        nearest = -1
        for i in range(n_nodes):
            d2 = (nodes[i, 0] - rx) ** 2 + (nodes[i, 1] - ry) ** 2
            if d2 < best_d2:
                best_d2 = d2
                nearest = i
        d = math.sqrt(best_d2)
        if d < 1e-12:
            continue
        scale = min(1.0, steer_step / d)
        nx = nodes[nearest, 0] + scale * (rx - nodes[nearest, 0])
        ny = nodes[nearest, 1] + scale * (ry - nodes[nearest, 1])
        if point_in_collision(nx, ny, rects, segs, discs):
            continue

        # near set radius, shrinking with tree size
        r_near = gamma * math.sqrt(math.log(float(n_nodes)) / float(n_nodes))
        cap = steer_step * 4.0
        if r_near > cap:
            r_near = cap
        r2 = r_near * r_near

        # choose parent among {nearest} + near set
        best_parent = -1
        best_cost = INF
        e = edge_cost(mode, nodes[nearest, 0], nodes[nearest, 1], nx, ny, cost_step,
                      weights, fparams, people, gridvals, gparams, expert, lparams,
                      rects, segs, discs)
        if e < INF:
            best_parent = nearest
            best_cost = cost[nearest] + e
        for i in range(n_nodes):
            if i == nearest:
                continue
            d2 = (nodes[i, 0] - nx) ** 2 + (nodes[i, 1] - ny) ** 2
            if d2 > r2:
                continue
            e = edge_cost(mode, nodes[i, 0], nodes[i, 1], nx, ny, cost_step,
                          weights, fparams, people, gridvals, gparams, expert, lparams,
                          rects, segs, discs)
            if cost[i] + e < best_cost:
                best_cost = cost[i] + e
                best_parent = i
        if best_parent == -1:
            continue

        ni = n_nodes
        nodes[ni, 0] = nx
        nodes[ni, 1] = ny
        parent[ni] = best_parent
        cost[ni] = best_cost
        _add_child(best_parent, ni, first_child, next_sib, prev_sib)
        near_goal[ni] = math.hypot(nx - goal_x, ny - goal_y) <= goal_tol
        n_nodes += 1

        # rewire the near set through the new node
        for i in range(ni):
            if i == best_parent:
                continue
            d2 = (nodes[i, 0] - nx) ** 2 + (nodes[i, 1] - ny) ** 2
            if d2 > r2:
                continue
            e = edge_cost(mode, nx, ny, nodes[i, 0], nodes[i, 1], cost_step,
                          weights, fparams, people, gridvals, gparams, expert, lparams,
                          rects, segs, discs)
            c_through = best_cost + e
            if c_through < cost[i] - 1e-12:
                _remove_child(parent[i], i, first_child, next_sib, prev_sib)
                parent[i] = ni
                _add_child(ni, i, first_child, next_sib, prev_sib)
                delta = c_through - cost[i]
                # propagate the improvement through the subtree
                top = 0
                stack[0] = i
                while top >= 0:
                    k = stack[top]
                    top -= 1
                    cost[k] += delta
                    ch = first_child[k]
                    while ch != -1:
                        top += 1
                        stack[top] = ch
                        ch = next_sib[ch]
    state[0] = n_nodes
    state[1] = n_biased
