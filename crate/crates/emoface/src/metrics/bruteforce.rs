//! Independent DTW reference: exhaustive enumeration of every monotone
//! alignment path. Exponential in sequence length, so only usable for short
//! inputs, but it shares no code with the dynamic-programming route and
//! serves as its correctness oracle.

use crate::error::{Error, Result};

/// Minimal total absolute-difference cost over all monotone alignments of
/// `a` and `b`, found by walking every path from (0, 0) to the final cell
/// with steps (1, 0), (0, 1), and (1, 1). No memoization: each alignment is
/// costed independently.
pub fn dtw_bruteforce(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("dtw is undefined for empty sequences"));
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, (a[0] - b[0]).abs(), &mut best);
    Ok(best)
}

fn walk(a: &[f64], b: &[f64], i: usize, j: usize, cost: f64, best: &mut f64) {
    if i == a.len() - 1 && j == b.len() - 1 {
        if cost < *best {
            *best = cost;
        }
        return;
    }
    for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
        let (ni, nj) = (i + di, j + dj);
        if ni < a.len() && nj < b.len() {
            walk(a, b, ni, nj, cost + (a[ni] - b[nj]).abs(), best);
        }
    }
}

/// Every sequence of length 1..=`max_len` over the given symbol alphabet, in
/// length-then-lexicographic order.
pub fn sequences_up_to(max_len: usize, symbols: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(current.len() * symbols.len());
        for prefix in &current {
            for &s in symbols {
                let mut seq = prefix.clone();
                seq.push(s);
                next.push(seq);
            }
        }
        out.extend(next.iter().cloned());
        current = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_handles_the_pinned_small_cases() {
        assert_eq!(dtw_bruteforce(&[0.0], &[1.0]).expect("single cell"), 1.0);
        let a = [2.0, 0.0, 1.0];
        assert_eq!(dtw_bruteforce(&a, &a).expect("identical"), 0.0);
        // [0, 2] vs [0, 1, 2]: the middle element aligns to either neighbor
        // at cost 1, so the best alignment costs exactly 1.
        assert_eq!(dtw_bruteforce(&[0.0, 2.0], &[0.0, 1.0, 2.0]).expect("insert case"), 1.0);
        let err = dtw_bruteforce(&[], &[0.0]).err().expect("empty input must fail");
        assert!(matches!(err, Error::Domain(_)), "empty input is a domain error, got {err}");
    }

    #[test]
    fn sequence_generator_covers_the_alphabet_exactly_once() {
        let seqs = sequences_up_to(3, &[0.0, 1.0, 2.0]);
        assert_eq!(seqs.len(), 3 + 9 + 27, "3 + 9 + 27 sequences up to length 3");
        let mut seen = std::collections::HashSet::new();
        for s in &seqs {
            assert!(!s.is_empty() && s.len() <= 3, "length stays within bounds");
            let key: Vec<u64> = s.iter().map(|v| *v as u64).collect();
            assert!(seen.insert(key), "no sequence appears twice");
        }
    }
}
