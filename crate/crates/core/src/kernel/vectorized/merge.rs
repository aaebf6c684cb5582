//! Pairwise merge of sorted runs through the lane network, with
//! discordant-pair counting and predict-and-skip shortcuts.

use super::network::{LaneVector, Lanes};

/// Switches for one [`vse_merge`] call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeOptions {
    /// Count cross-run inversions (strict `<`) before merging.
    pub count: bool,
    /// Enable the predict-and-skip fast paths. Output never depends on it.
    pub fast_paths: bool,
}

impl Default for MergeOptions {
    fn default() -> Self {
        MergeOptions {
            count: true,
            fast_paths: true,
        }
    }
}

/// Cursor state handed to the leftover stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeftoverCursors {
    /// Next unread element of the left run `[.., mid)`.
    pub l: usize,
    pub mid: usize,
    /// Next unread element of the right run `[.., right)`.
    pub r: usize,
    pub right: usize,
    /// Next output slot.
    pub p: usize,
}

/// Number of pairs `(i, j)`, `i` in the left run and `j` in the right run,
/// with `input[j] < input[i]`. Branch-free two-pointer scan.
#[inline(always)]
pub(crate) fn count_cross(input: &[i32], left: usize, mid: usize, right: usize) -> u64 {
    let a = &input[left..mid];
    let b = &input[mid..right];
    let (mut l, mut r) = (0usize, 0usize);
    let mut n_d = 0u64;
    while l < a.len() && r < b.len() {
        let lt = (b[r] < a[l]) as usize;
        n_d += (lt * (a.len() - l)) as u64;
        r += lt;
        l += 1 - lt;
    }
    n_d
}

#[inline(always)]
fn scalar_merge(
    input: &[i32],
    out: &mut [i32],
    left: usize,
    mid: usize,
    right: usize,
    count: bool,
) -> u64 {
    let (mut l, mut r, mut p) = (left, mid, left);
    let mut n_d = 0u64;
    while l < mid && r < right {
        if input[r] < input[l] {
            if count {
                n_d += (mid - l) as u64;
            }
            out[p] = input[r];
            r += 1;
        } else {
            out[p] = input[l];
            l += 1;
        }
        p += 1;
    }
    copy_rest(input, out, l, mid, r, right, p);
    n_d
}

#[inline(always)]
fn copy_rest(
    input: &[i32],
    out: &mut [i32],
    l: usize,
    mid: usize,
    r: usize,
    right: usize,
    p: usize,
) {
    if l < mid {
        out[p..p + (mid - l)].copy_from_slice(&input[l..mid]);
    } else if r < right {
        out[p..p + (right - r)].copy_from_slice(&input[r..right]);
    }
}

/// Sorts the 2W values of two ascending vectors, skipping the network when
/// their ranges do not overlap.
#[inline(always)]
unsafe fn merge_step<L: Lanes>(a: L, b: L, fast: bool) -> (L, L) {
    if fast {
        if a.reduce_min() >= b.reduce_max() {
            return (b, a);
        }
        if b.reduce_min() >= a.reduce_max() {
            return (a, b);
        }
    }
    a.merge(b)
}

/// Merges `input[left..mid)` and `input[mid..right)` into `out[left..right)`
/// and returns the cross-run inversion count (0 unless `opts.count`).
///
/// # Safety
///
/// The CPU must support the features `L` relies on.
#[inline(always)]
pub(crate) unsafe fn vse_merge_generic<L: Lanes>(
    input: &[i32],
    out: &mut [i32],
    left: usize,
    mid: usize,
    right: usize,
    opts: MergeOptions,
) -> u64 {
    let w = L::WIDTH;
    if mid - left < w || right - mid < w {
        return scalar_merge(input, out, left, mid, right, opts.count);
    }
    let n_d = if opts.count {
        count_cross(input, left, mid, right)
    } else {
        0
    };
    let fast = opts.fast_paths;

    let mut vmin = L::load(&input[left..]);
    let mut vmax = L::load(&input[mid..]);
    let (mut l, mut r, mut p) = (left + w, mid + w, left);
    loop {
        let (lo, hi) = merge_step(vmin, vmax, fast);
        lo.store(&mut out[p..]);
        p += w;
        vmax = hi;

        if l + w > mid || r + w > right {
            break;
        }
        let (a, b) = (input[l], input[r]);
        if fast && {
            let c = vmax.reduce_max();
            c <= a && c <= b
        } {
            // nothing unread can precede vmax
            vmax.store(&mut out[p..]);
            p += w;
            vmin = L::load(&input[l..]);
            l += w;
            vmax = L::load(&input[r..]);
            r += w;
        } else if b < a {
            vmin = L::load(&input[r..]);
            r += w;
        } else {
            vmin = L::load(&input[l..]);
            l += w;
        }
    }

    let cursors = LeftoverCursors {
        l,
        mid,
        r,
        right,
        p,
    };
    leftover_generic(input, out, cursors, vmax, w, fast);
    n_d
}

/// Drains both runs once fewer than W elements remain in at least one of
/// them. `hi` holds `hi_valid` pending values in its lowest lanes (the rest
/// are `i32::MAX` padding). Returns the final output position.
#[inline(always)]
pub(crate) unsafe fn leftover_generic<L: Lanes>(
    input: &[i32],
    out: &mut [i32],
    cursors: LeftoverCursors,
    mut hi: L,
    mut hi_valid: usize,
    fast: bool,
) -> usize {
    let w = L::WIDTH;
    let LeftoverCursors {
        mut l,
        mid,
        mut r,
        right,
        mut p,
    } = cursors;
    loop {
        let a_left = l < mid;
        let b_left = r < right;
        if !a_left && !b_left {
            break;
        }
        let take_right = if a_left && b_left {
            input[r] < input[l]
        } else {
            b_left
        };
        let (start, end) = if take_right { (r, right) } else { (l, mid) };

        if fast && !(a_left && b_left) {
            let pending_max = match hi_valid {
                0 => i32::MIN,
                k if k == w => hi.reduce_max(),
                k => hi.lane(k - 1),
            };
            if pending_max <= input[start] {
                // the remaining run follows everything pending verbatim
                break;
            }
        }

        let cnt = w.min(end - start);
        let block = if cnt == w {
            L::load(&input[start..])
        } else {
            L::load_partial(&input[start..end])
        };
        if take_right {
            r += cnt;
        } else {
            l += cnt;
        }

        let (lo, next_hi) = merge_step(block, hi, fast);
        let total = cnt + hi_valid;
        let emit = w.min(total);
        if emit == w {
            lo.store(&mut out[p..]);
        } else {
            lo.store_partial(&mut out[p..p + emit]);
        }
        p += emit;
        hi = next_hi;
        hi_valid = total - emit;
    }

    if hi_valid > 0 {
        if hi_valid == w {
            hi.store(&mut out[p..]);
        } else {
            hi.store_partial(&mut out[p..p + hi_valid]);
        }
        p += hi_valid;
    }
    copy_rest(input, out, l, mid, r, right, p);
    p + (mid - l) + (right - r)
}

/// Leftover stage on the portable lane type.
///
/// `hi` holds `hi_valid` pending values (ascending, lowest lanes) that are
/// not larger than anything already written and not yet emitted; the
/// remaining lanes must be `i32::MAX`. Writes the merge of `hi` and both
/// unread run tails to `out[cursors.p..]` and returns the end position.
pub fn merge_leftover<const W: usize>(
    input: &[i32],
    out: &mut [i32],
    cursors: LeftoverCursors,
    hi: LaneVector<W>,
    hi_valid: usize,
    fast_paths: bool,
) -> usize {
    assert!(hi_valid <= W);
    // SAFETY: the portable lane type needs no CPU features
    unsafe { leftover_generic(input, out, cursors, hi, hi_valid, fast_paths) }
}
