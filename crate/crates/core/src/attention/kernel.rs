//! Scaled dot-product core shared by every attention variant.
//!
//! One query token against a gathered key/value block, per head:
//! max-subtraction stabilized softmax over `scale * q.k`, then the weighted
//! value sum. Summation order is fixed (key order, four-lane dot products),
//! which is what makes parallel and sequential runs bit-identical.

use super::weights::AttentionConfig;
use super::AttentionError;

/// Fixed-order dot product with four accumulator lanes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let n4 = a.len() / 4 * 4;
    let mut i = 0;
    while i < n4 {
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = 0.0;
    while i < a.len() {
        tail += a[i] * b[i];
        i += 1;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One query over `M` gathered keys/values, all heads, written into `out`.
pub(crate) fn attend_token(
    out: &mut [f64],
    query: &[f64],
    keys: &[f64],
    values: &[f64],
    cfg: &AttentionConfig,
    scores: &mut Vec<f64>,
) {
    attend_token_masked(out, query, keys, values, cfg, scores, |_| true)
}

/// Like [`attend_token`] but keys with `allow(j) == false` are masked out
/// (score pinned to negative infinity). A fully masked head yields zeros.
pub(crate) fn attend_token_masked(
    out: &mut [f64],
    query: &[f64],
    keys: &[f64],
    values: &[f64],
    cfg: &AttentionConfig,
    scores: &mut Vec<f64>,
    allow: impl Fn(usize) -> bool,
) {
    let c = cfg.channels();
    debug_assert_eq!(query.len(), c);
    debug_assert_eq!(keys.len() % c, 0);
    debug_assert_eq!(keys.len(), values.len());
    let m = keys.len() / c;
    scores.resize(m, 0.0);
    for h in 0..cfg.heads {
        let off = h * cfg.head_dim;
        let qh = &query[off..off + cfg.head_dim];
        let mut max = f64::NEG_INFINITY;
        for (j, slot) in scores.iter_mut().enumerate() {
            let s = if allow(j) {
                let kh = &keys[j * c + off..j * c + off + cfg.head_dim];
                cfg.scale * dot(qh, kh)
            } else {
                f64::NEG_INFINITY
            };
            if s > max {
                max = s;
            }
            *slot = s;
        }
        let oh = &mut out[off..off + cfg.head_dim];
        if max == f64::NEG_INFINITY {
            oh.fill(0.0);
            continue;
        }
        let mut denom = 0.0;
        for slot in scores.iter_mut() {
            let e = (*slot - max).exp();
            denom += e;
            *slot = e;
        }
        oh.fill(0.0);
        for (j, &weight) in scores.iter().enumerate() {
            if weight == 0.0 {
                continue;
            }
            let vh = &values[j * c + off..j * c + off + cfg.head_dim];
            for (o, &x) in oh.iter_mut().zip(vh) {
                *o += weight * x;
            }
        }
        let inv = 1.0 / denom;
        for o in oh.iter_mut() {
            *o *= inv;
        }
    }
}

/// `softmax(q k^T * scale) v` for raw single-head matrices: `q` is
/// `T x head_dim`, `k` and `v` are `M x head_dim`, all row-major.
pub fn scaled_dot_attention(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    head_dim: usize,
    scale: f64,
) -> Result<Vec<f64>, AttentionError> {
    if head_dim == 0 || q.len() % head_dim != 0 || k.len() % head_dim != 0 {
        return Err(AttentionError::ShapeMismatch(format!(
            "q/k lengths {}/{} are not multiples of head_dim {head_dim}",
            q.len(),
            k.len()
        )));
    }
    if k.len() != v.len() {
        return Err(AttentionError::ShapeMismatch(format!(
            "k has {} entries but v has {}",
            k.len(),
            v.len()
        )));
    }
    if k.is_empty() {
        return Err(AttentionError::ShapeMismatch(
            "attention needs at least one key".into(),
        ));
    }
    for (name, buf) in [("q", q), ("k", k), ("v", v)] {
        if !buf.iter().all(|x| x.is_finite()) {
            let _ = name;
            return Err(AttentionError::NonFinite("scaled_dot_attention input"));
        }
    }
    let cfg = AttentionConfig {
        heads: 1,
        head_dim,
        scale,
    };
    let mut out = vec![0.0; q.len()];
    let mut scores = Vec::new();
    for (qt, ot) in q.chunks_exact(head_dim).zip(out.chunks_exact_mut(head_dim)) {
        attend_token(ot, qt, k, v, &cfg, &mut scores);
    }
    Ok(out)
}

/// Softmax attention weights of one query row against `M` keys; the row
/// sums to one. Exposed for inspection and tests.
pub fn attention_weights(
    query: &[f64],
    keys: &[f64],
    scale: f64,
) -> Result<Vec<f64>, AttentionError> {
    let head_dim = query.len();
    if head_dim == 0 || keys.len() % head_dim != 0 || keys.is_empty() {
        return Err(AttentionError::ShapeMismatch(
            "query/key dimensions do not divide".into(),
        ));
    }
    let mut scores: Vec<f64> = keys
        .chunks_exact(head_dim)
        .map(|kh| scale * dot(query, kh))
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut denom = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        denom += *s;
    }
    for s in scores.iter_mut() {
        *s /= denom;
    }
    Ok(scores)
}

/// Runs `f` over equally sized output units, sequentially or via rayon.
/// Units are disjoint output slices, so the two modes are bit-identical.
pub(crate) fn run_units<F>(out: &mut [f64], unit_len: usize, parallel: bool, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        out.par_chunks_mut(unit_len)
            .enumerate()
            .for_each(|(u, chunk)| f(u, chunk));
        return;
    }
    let _ = parallel;
    for (u, chunk) in out.chunks_mut(unit_len).enumerate() {
        f(u, chunk);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_key_broadcasts_the_value() {
        // Softmax over one key is 1, so every query row returns v.
        let q = vec![0.3, -1.2, 0.0, 5.0, 2.0, -2.0];
        let k = vec![0.7, 0.1];
        let v = vec![4.0, -3.0];
        let out = scaled_dot_attention(&q, &k, &v, 2, 0.5).unwrap();
        assert_eq!(out, vec![4.0, -3.0, 4.0, -3.0, 4.0, -3.0]);
    }

    #[test]
    fn large_scale_one_hot_rows_self_select() {
        // Orthogonal one-hot rows with a large scale: softmax sharpens onto
        // the matching key, so the output returns each row's own value.
        let dim = 4;
        let mut q = vec![0.0; dim * dim];
        for i in 0..dim {
            q[i * dim + i] = 1.0;
        }
        let k = q.clone();
        let v: Vec<f64> = (0..dim * dim).map(|i| i as f64).collect();
        let out = scaled_dot_attention(&q, &k, &v, dim, 100.0).unwrap();
        for (o, expect) in out.iter().zip(&v) {
            assert_abs_diff_eq!(o, expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn uniform_keys_give_uniform_weights() {
        let query = vec![0.4, -0.9, 1.3];
        let keys = vec![0.5, 0.5, 0.5].repeat(7);
        let w = attention_weights(&query, &keys, 0.7).unwrap();
        assert_eq!(w.len(), 7);
        for weight in &w {
            assert_abs_diff_eq!(weight, &(1.0 / 7.0), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(scaled_dot_attention(&[1.0], &[1.0, 2.0], &[1.0, 2.0], 2, 1.0).is_err());
        assert!(scaled_dot_attention(&[1.0, 2.0], &[1.0, 2.0], &[1.0], 2, 1.0).is_err());
        assert!(scaled_dot_attention(&[f64::NAN, 0.0], &[1.0, 2.0], &[1.0, 2.0], 2, 1.0).is_err());
        assert!(scaled_dot_attention(&[1.0, 2.0], &[], &[], 2, 1.0).is_err());
    }

    #[test]
    fn masked_keys_are_ignored() {
        let cfg = AttentionConfig::single_head(2).unwrap();
        let q = [1.0, 0.0];
        let keys = [1.0, 0.0, 0.0, 1.0, -1.0, 0.0];
        let values = [1.0, 10.0, 2.0, 20.0, 3.0, 30.0];
        let mut unmasked = [0.0; 2];
        let mut scores = Vec::new();
        attend_token(&mut unmasked, &q, &keys, &values, &cfg, &mut scores);
        let mut masked = [0.0; 2];
        attend_token_masked(&mut masked, &q, &keys, &values, &cfg, &mut scores, |j| j != 2);
        // Masking key 2 must shift the result toward keys 0 and 1 only.
        let w = attention_weights(&q, &keys[..4], cfg.scale).unwrap();
        let expect = [
            w[0] * values[0] + w[1] * values[2],
            w[0] * values[1] + w[1] * values[3],
        ];
        assert_abs_diff_eq!(masked[0], expect[0], epsilon = 1e-12);
        assert_abs_diff_eq!(masked[1], expect[1], epsilon = 1e-12);
        assert_ne!(unmasked, masked);
    }
}
