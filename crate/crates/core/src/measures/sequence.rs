use crate::error::{Error, Result};

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn non_empty(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("point sequence is empty".into()));
    }
    Ok(())
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    non_empty(a, b)?;
    Ok(directed_hausdorff(a, b, 0.0).max(directed_hausdorff(b, a, 0.0)))
}

/// `max_{p in a} min_{q in b} |p - q|`, skipping points that cannot raise `floor`.
fn directed_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]], floor: f64) -> f64 {
    let mut cmax = floor;
    for &p in a {
        let mut cmin = f64::INFINITY;
        for &q in b {
            let d = dist(p, q);
            if d < cmin {
                cmin = d;
                if cmin <= cmax {
                    break;
                }
            }
        }
        if cmin > cmax {
            cmax = cmin;
        }
    }
    cmax
}

/// Discrete Fréchet distance via a rolling dynamic program over the coupling lattice.
pub fn discrete_frechet(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    non_empty(a, b)?;
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0; m];
    for (i, &p) in a.iter().enumerate() {
        for j in 0..m {
            let d = dist(p, b[j]);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Dynamic time warping with Euclidean local cost; returns the accumulated cost.
pub fn dtw(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    non_empty(a, b)?;
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &p in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            cur[j] = dist(p, b[j - 1]) + prev[j].min(prev[j - 1]).min(cur[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
        prev[0] = f64::INFINITY;
    }
    Ok(prev[m])
}

/// `1 - cos(u, v)` for non-negative vectors, in `[0, 1]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>();
    let nv = v.iter().map(|a| a * a).sum::<f64>();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Undefined("cosine distance of a zero vector".into()));
    }
    // sqrt of the product keeps u == v exactly at zero
    Ok((1.0 - dot / (nu * nv).sqrt()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hausdorff_examples() {
        let a = [[0.0, 0.0], [1.0, 1.0]];
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap(), 5.0);
        // directed distances differ: a->b is 1, b->a is 10
        let a = [[0.0, 0.0]];
        let b = [[1.0, 0.0], [10.0, 0.0]];
        assert_eq!(hausdorff(&a, &b).unwrap(), 10.0);
        assert!(hausdorff(&[], &b).is_err());
    }

    #[test]
    fn frechet_examples() {
        let a = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert_eq!(discrete_frechet(&a, &a).unwrap(), 0.0);
        assert_eq!(discrete_frechet(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap(), 5.0);
        let shifted: Vec<[f64; 2]> = a.iter().map(|p| [p[0], p[1] + 1000.0]).collect();
        assert_eq!(discrete_frechet(&a, &shifted).unwrap(), 1000.0);
    }

    #[test]
    fn dtw_examples() {
        let a = [[0.0, 0.0], [1.0, 0.0]];
        assert_eq!(dtw(&a, &a).unwrap(), 0.0);
        let b = [[3.0, 4.0], [0.0, 0.0], [0.0, 2.0]];
        assert_eq!(dtw(&[[0.0, 0.0]], &b).unwrap(), 7.0);
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(
            cosine_distance(&[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(),
            1.0 - 1.0 / 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }
}
