//! Bisection on a monotone feasibility oracle.

/// One probe of the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub step: usize,
    pub tau: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct Bisection<T> {
    /// Largest probe found feasible, or the initial lower bound.
    pub lo: f64,
    /// Smallest probe found infeasible, or the initial upper bound.
    pub hi: f64,
    /// Payload of the probe that set `lo`, if any probe was feasible.
    pub best: Option<T>,
    pub probes: Vec<Probe>,
}

/// Bisect `[lo, hi]` until its width is at most `eps`. At least one probe
/// is always made, so `eps >= hi - lo` still costs a single oracle call.
/// It also stops once the midpoint no longer splits the interval in floating point.
/// `oracle(tau)` returns `Some(payload)` when `tau` is feasible.
pub fn bisect<T, E>(
    mut lo: f64,
    mut hi: f64,
    eps: f64,
    mut oracle: impl FnMut(f64) -> Result<Option<T>, E>,
) -> Result<Bisection<T>, E> {
    let mut best = None;
    let mut probes = Vec::new();
    loop {
        let tau = 0.5 * (lo + hi);
        let verdict = oracle(tau)?;
        let feasible = verdict.is_some();
        probes.push(Probe { step: probes.len() + 1, tau, feasible });
        if let Some(p) = verdict {
            lo = tau;
            best = Some(p);
        } else {
            hi = tau;
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= eps || mid <= lo || mid >= hi {
            break;
        }
    }
    Ok(Bisection { lo, hi, best, probes })
}

/// Probes needed to shrink `width` to `eps`.
pub fn expected_steps(width: f64, eps: f64) -> usize {
    (width / eps).log2().ceil().max(1.0) as usize
}
