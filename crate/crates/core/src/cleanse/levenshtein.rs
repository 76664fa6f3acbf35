use crate::error::{Error, Result};

/// Unit-cost edit distance over Unicode scalar values.
pub fn lev_dist(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance averaged over both lengths:
/// `½ · (d/|a| + d/|b|)`. Undefined for empty strings.
pub fn norm_lev(a: &str, b: &str) -> Result<f64> {
    let (la, lb) = (a.chars().count(), b.chars().count());
    if la == 0 || lb == 0 {
        return Err(Error::EmptyString);
    }
    let d = lev_dist(a, b) as f64;
    Ok(0.5 * (d / la as f64 + d / lb as f64))
}
