/// Keyframes kept per clip.
pub const DEFAULT_KEYFRAMES: usize = 20;

/// `n` frame indices `floor(i * total / n)`: uniform coverage, non-decreasing,
/// duplicated when the clip is shorter than `n`. Empty if either count is 0.
pub fn sample_keyframes(total_frames: usize, n: usize) -> Vec<usize> {
    if total_frames == 0 {
        return Vec::new();
    }
    (0..n).map(|i| i * total_frames / n).collect()
}
