"""Compiled lattice kernels shared by the move API, the annealer and the enumerator.

Array conventions: ``grid[column, row]`` int8 phase codes (V=0, A=1, B=2),
``heights[column]`` int64, ``costs`` a 4x4 per-face cost table already scaled
by the cell side, substrate code 3.
"""
import numpy as np
from numba import njit

GROW, SHRINK, RELABEL, SWAP, RESCALE, TRANSFER = 0, 1, 2, 3, 4, 5
SUBSTRATE = 3

@njit(cache=True)
def marker_value(p):
    if p == 1:
        return 1.0
    if p == 2:
        return -1.0
    return 0.0


@njit(cache=True)
def _nth_column(heights, ny, want_grow, k):
    # k-th column (0-based) with h < ny (grow) or h > 0 (shrink)
    for i in range(heights.shape[0]):
        ok = heights[i] < ny if want_grow else heights[i] > 0
        if ok:
            if k == 0:
                return i
            k -= 1
    return -1


@njit(cache=True)
def _nth_cell(grid, heights, phase, k):
    # k-th cell with the given phase (phase 0 means any film cell), column-major
    for i in range(grid.shape[0]):
        for j in range(heights[i]):
            if phase == 0 or grid[i, j] == phase:
                if k == 0:
                    return i, j
                k -= 1
    return -1, -1


@njit(cache=True)
def propose(grid, heights, n_a, n_b, weights, constrained, rng, params):
    """Draw a move kind and its parameters; returns the kind or -1 if none is legal."""
    nx, ny = grid.shape
    n_grow = 0
    n_shrink = 0
    for i in range(nx):
        if heights[i] < ny:
            n_grow += 1
        if heights[i] > 0:
            n_shrink += 1
    n_film = n_a + n_b
    w = np.zeros(6)
    if constrained:
        if _transfer_pairs(heights, ny, n_grow) > 0:
            w[TRANSFER] = weights[GROW] + weights[SHRINK]
        if n_a > 0 and n_b > 0:
            w[SWAP] = weights[SWAP]
    else:
        if n_grow > 0:
            w[GROW] = weights[GROW]
        if n_shrink > 0:
            w[SHRINK] = weights[SHRINK]
        if n_film > 0:
            w[RELABEL] = weights[RELABEL]
            w[RESCALE] = weights[RESCALE]
        if n_a > 0 and n_b > 0:
            w[SWAP] = weights[SWAP]
    total = w.sum()
    if total <= 0.0:
        return -1
    x = rng.random() * total
    kind = 5
    acc = 0.0
    for k in range(6):
        if w[k] > 0.0:
            acc += w[k]
            kind = k
            if x < acc:
                break

    if kind == GROW:
        params[0] = _nth_column(heights, ny, True, rng.integers(0, n_grow))
        params[1] = 1 + rng.integers(0, 2)
    elif kind == SHRINK:
        params[0] = _nth_column(heights, ny, False, rng.integers(0, n_shrink))
    elif kind == RELABEL:
        i, j = _nth_cell(grid, heights, 0, rng.integers(0, n_film))
        params[0] = i
        params[1] = j
    elif kind == SWAP:
        i, j = _nth_cell(grid, heights, 1, rng.integers(0, n_a))
        params[0] = i
        params[1] = j
        i, j = _nth_cell(grid, heights, 2, rng.integers(0, n_b))
        params[2] = i
        params[3] = j
    elif kind == RESCALE:
        rmax = (nx + 1) // 2
        smax = max(1, ny // 2)
        params[0] = rng.integers(0, nx)
        params[1] = 1 + rng.integers(0, rmax)
        s = 1 + rng.integers(0, smax)
        params[2] = s if rng.random() < 0.5 else -s
    else:
        # uniform over (donor, receiver) pairs with donor != receiver
        k = rng.integers(0, _transfer_pairs(heights, ny, n_grow))
        for src in range(nx):
            if heights[src] == 0:
                continue
            for dst in range(nx):
                if dst != src and heights[dst] < ny:
                    if k == 0:
                        params[0] = src
                        params[1] = dst
                        return kind
                    k -= 1
    return kind


@njit(cache=True)
def _transfer_pairs(heights, ny, n_grow):
    total = 0
    for i in range(heights.shape[0]):
        if heights[i] > 0:
            total += n_grow - (1 if heights[i] < ny else 0)
    return total


@njit(cache=True)
def build_changes(grid, heights, kind, params, ch_i, ch_j, ch_old, ch_new, hc_col, hc_new):
    """Fill change buffers for a move without mutating the state.

    Returns ``(n_cells, n_height_changes)``.
    """
    nx, ny = grid.shape
    n = 0
    nh = 0
    if kind == GROW:
        i = params[0]
        ch_i[0] = i
        ch_j[0] = heights[i]
        ch_old[0] = 0
        ch_new[0] = params[1]
        hc_col[0] = i
        hc_new[0] = heights[i] + 1
        n, nh = 1, 1
    elif kind == SHRINK:
        i = params[0]
        ch_i[0] = i
        ch_j[0] = heights[i] - 1
        ch_old[0] = grid[i, heights[i] - 1]
        ch_new[0] = 0
        hc_col[0] = i
        hc_new[0] = heights[i] - 1
        n, nh = 1, 1
    elif kind == RELABEL:
        i, j = params[0], params[1]
        ch_i[0] = i
        ch_j[0] = j
        ch_old[0] = grid[i, j]
        ch_new[0] = 3 - grid[i, j]
        n = 1
    elif kind == SWAP:
        ch_i[0] = params[0]
        ch_j[0] = params[1]
        ch_old[0] = 1
        ch_new[0] = 2
        ch_i[1] = params[2]
        ch_j[1] = params[3]
        ch_old[1] = 2
        ch_new[1] = 1
        n = 2
    elif kind == TRANSFER:
        src, dst = params[0], params[1]
        top = grid[src, heights[src] - 1]
        ch_i[0] = src
        ch_j[0] = heights[src] - 1
        ch_old[0] = top
        ch_new[0] = 0
        ch_i[1] = dst
        ch_j[1] = heights[dst]
        ch_old[1] = 0
        ch_new[1] = top
        hc_col[0] = src
        hc_new[0] = heights[src] - 1
        hc_col[1] = dst
        hc_new[1] = heights[dst] + 1
        n, nh = 2, 2
    elif kind == RESCALE:
        i0, r, sigma = params[0], params[1], params[2]
        for d in range(-(r - 1), r):
            col = (i0 + d) % nx
            h = heights[col]
            if h == 0:
                continue
            q = sigma * (r - abs(d))
            # triangular taper, rounded toward zero
            change = q // r if q >= 0 else -((-q) // r)
            hn = min(max(h + change, 0), ny)
            if hn == h:
                continue
            hc_col[nh] = col
            hc_new[nh] = hn
            nh += 1
            top = max(h, hn)
            for k in range(top):
                if k < hn:
                    new = grid[col, ((2 * k + 1) * h) // (2 * hn)]
                else:
                    new = 0
                old = grid[col, k]
                if new != old:
                    ch_i[n] = col
                    ch_j[n] = k
                    ch_old[n] = old
                    ch_new[n] = new
                    n += 1
    return n, nh


@njit(cache=True)
def local_cost(grid, costs, ch_i, ch_j, n, mark):
    """Cost of every face touching a changed cell, each face once."""
    nx, ny = grid.shape
    total = 0.0
    for c in range(n):
        i, j = ch_i[c], ch_j[c]
        p = grid[i, j]
        right = (i + 1) % nx
        total += costs[p, grid[right, j]]
        left = (i - 1) % nx
        if mark[left, j] == 0:
            total += costs[p, grid[left, j]]
        if j < ny - 1:
            total += costs[p, grid[i, j + 1]]
        if j == 0:
            total += costs[p, SUBSTRATE]
        elif mark[i, j - 1] == 0:
            total += costs[p, grid[i, j - 1]]
    return total


@njit(cache=True)
def set_marks(mark, ch_i, ch_j, n, value):
    for c in range(n):
        mark[ch_i[c], ch_j[c]] = value


@njit(cache=True)
def apply_changes(grid, heights, ch_i, ch_j, vals, n, hc_col, hc_vals, nh):
    for c in range(n):
        grid[ch_i[c], ch_j[c]] = vals[c]
    for c in range(nh):
        heights[hc_col[c]] = hc_vals[c]


@njit(cache=True)
def nonlocal_delta(green, pot, ch_i, ch_j, ch_old, ch_new, n):
    """Change of ``u^T K^+ u`` for the given cell changes."""
    nx = green.shape[0]
    lin = 0.0
    quad = 0.0
    for a in range(n):
        da = marker_value(ch_new[a]) - marker_value(ch_old[a])
        if da == 0.0:
            continue
        lin += da * pot[ch_i[a], ch_j[a]]
        for b in range(n):
            db = marker_value(ch_new[b]) - marker_value(ch_old[b])
            if db == 0.0:
                continue
            quad += da * db * green[(ch_i[a] - ch_i[b]) % nx, ch_j[a], ch_j[b]]
    return 2.0 * lin + quad


@njit(cache=True)
def update_potential(green, pot, ch_i, ch_j, ch_old, ch_new, n):
    nx = green.shape[0]
    ny = green.shape[1]
    for c in range(n):
        d = marker_value(ch_new[c]) - marker_value(ch_old[c])
        if d == 0.0:
            continue
        ic, jc = ch_i[c], ch_j[c]
        for i in range(nx):
            g = green[(i - ic) % nx]
            for j in range(ny):
                pot[i, j] += d * g[j, jc]


@njit(cache=True)
def count_changes(ch_old, ch_new, n):
    d_a = 0
    d_f = 0
    for c in range(n):
        if ch_old[c] == 1:
            d_a -= 1
        if ch_new[c] == 1:
            d_a += 1
        if ch_old[c] != 0:
            d_f -= 1
        if ch_new[c] != 0:
            d_f += 1
    return d_a, d_f


@njit(cache=True)
def is_admissible(grid, heights):
    nx, ny = grid.shape
    for i in range(nx):
        for j in range(ny):
            if (j < heights[i]) != (grid[i, j] != 0):
                return False
    return True


@njit(cache=True)
def move_delta(grid, heights, costs, kind, params, use_nl, nl_scale, green, pot,
               pen_on, lam_da, n_a, n_f, m_cells, big_m_cells,
               ch_i, ch_j, ch_old, ch_new, hc_col, hc_old, hc_new, mark):
    """Apply a move in place and return its energy change; caller reverts if needed."""
    n, nh = build_changes(grid, heights, kind, params, ch_i, ch_j, ch_old, ch_new, hc_col, hc_new)
    for c in range(nh):
        hc_old[c] = heights[hc_col[c]]
    if n == 0:
        apply_changes(grid, heights, ch_i, ch_j, ch_new, 0, hc_col, hc_new, nh)
        return 0.0, n, nh, 0, 0
    set_marks(mark, ch_i, ch_j, n, 1)
    before = local_cost(grid, costs, ch_i, ch_j, n, mark)
    apply_changes(grid, heights, ch_i, ch_j, ch_new, n, hc_col, hc_new, nh)
    after = local_cost(grid, costs, ch_i, ch_j, n, mark)
    set_marks(mark, ch_i, ch_j, n, 0)
    delta = after - before
    if use_nl:
        delta += nl_scale * nonlocal_delta(green, pot, ch_i, ch_j, ch_old, ch_new, n)
    d_a, d_f = count_changes(ch_old, ch_new, n)
    if pen_on:
        old_pen = abs(n_a - m_cells) + abs(n_f - big_m_cells)
        new_pen = abs(n_a + d_a - m_cells) + abs(n_f + d_f - big_m_cells)
        delta += lam_da * (new_pen - old_pen)
    return delta, n, nh, d_a, d_f


@njit(cache=True)
def anneal_kernel(grid, heights, costs, use_nl, nl_scale, green, pot,
                  pen_on, lam_da, m_cells, big_m_cells, constrained, weights,
                  t0, alpha, steps, rng, energy0, trace_every,
                  trace_step, trace_t, trace_f, trace_acc, best_grid, validate):
    """Metropolis chain with geometric cooling; mutates grid/heights/pot in place.

    Returns ``(best_energy, final_energy, accepted, n_trace, violations, frozen_step)``
    where ``frozen_step`` is -1 unless no legal move existed at that step.
    """
    nx, ny = grid.shape
    cap = nx * ny + 2
    ch_i = np.empty(cap, np.int64)
    ch_j = np.empty(cap, np.int64)
    ch_old = np.empty(cap, np.int8)
    ch_new = np.empty(cap, np.int8)
    hc_col = np.empty(nx + 2, np.int64)
    hc_old = np.empty(nx + 2, np.int64)
    hc_new = np.empty(nx + 2, np.int64)
    mark = np.zeros((nx, ny), np.int8)
    params = np.zeros(4, np.int64)

    n_a = 0
    n_f = 0
    for i in range(nx):
        for j in range(heights[i]):
            n_f += 1
            if grid[i, j] == 1:
                n_a += 1
    n_a0 = n_a
    n_b0 = n_f - n_a

    energy = energy0
    best = energy0
    best_grid[:, :] = grid
    temp = t0
    accepted = 0
    violations = 0
    n_trace = 0
    for step in range(steps):
        kind = propose(grid, heights, n_a, n_f - n_a, weights, constrained, rng, params)
        if kind < 0:
            return best, energy, accepted, n_trace, violations, step
        delta, n, nh, d_a, d_f = move_delta(
            grid, heights, costs, kind, params, use_nl, nl_scale, green, pot,
            pen_on, lam_da, n_a, n_f, m_cells, big_m_cells,
            ch_i, ch_j, ch_old, ch_new, hc_col, hc_old, hc_new, mark)
        ok = delta <= 0.0 or rng.random() < np.exp(-delta / temp)
        if ok:
            accepted += 1
            energy += delta
            n_a += d_a
            n_f += d_f
            if use_nl:
                update_potential(green, pot, ch_i, ch_j, ch_old, ch_new, n)
            if energy < best:
                best = energy
                best_grid[:, :] = grid
        else:
            apply_changes(grid, heights, ch_i, ch_j, ch_old, n, hc_col, hc_old, nh)
        if validate:
            if not is_admissible(grid, heights):
                violations += 1
            if constrained and (n_a != n_a0 or n_f - n_a != n_b0):
                violations += 1
        if trace_every > 0 and step % trace_every == 0 and n_trace < trace_step.shape[0]:
            trace_step[n_trace] = step
            trace_t[n_trace] = temp
            trace_f[n_trace] = energy
            trace_acc[n_trace] = 1 if ok else 0
            n_trace += 1
        temp *= alpha
    return best, energy, accepted, n_trace, violations, -1
