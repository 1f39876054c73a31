use crate::{Error, Result, Window};

/// Cuts aligned per-channel streams into windows of `len` samples taken
/// every `stride` samples.
///
/// Each window's label is the majority of its per-sample labels, ties going
/// to the higher class index. Produces `(N - len) / stride + 1` windows with
/// ids `w0`, `w1`, ...
pub fn window_signal(streams: &[Vec<f32>], len: usize, stride: usize, labels: &[u8]) -> Result<Vec<Window>> {
    let n = streams.first().map(Vec::len).unwrap_or(0);
    if streams.is_empty() || streams.iter().any(|s| s.len() != n) {
        return Err(Error::precondition("streams must be non-empty and of equal length"));
    }
    if labels.len() != n {
        return Err(Error::precondition(format!("{} labels for {n} samples", labels.len())));
    }
    if len == 0 || stride == 0 {
        return Err(Error::precondition("window length and stride must be at least 1"));
    }
    if n < len {
        return Err(Error::precondition(format!(
            "stream of {n} samples is shorter than window length {len}"
        )));
    }
    let classes = labels.iter().copied().max().map_or(1, |m| usize::from(m) + 1);
    (0..=(n - len) / stride)
        .map(|k| {
            let start = k * stride;
            let channels = streams.iter().map(|s| s[start..start + len].to_vec()).collect();
            let mut counts = vec![0usize; classes];
            for &l in &labels[start..start + len] {
                counts[usize::from(l)] += 1;
            }
            let label = (0..classes).rev().max_by_key(|&c| (counts[c], c)).unwrap_or(0);
            Window::new(format!("w{k}"), channels, Some(label as u8))
        })
        .collect()
}
