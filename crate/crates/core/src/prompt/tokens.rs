//! Slow/fast visual token accounting and the interleaved input layout
//! `[fast_1; id_1; ...; fast_Nf; id_Nf; slow_1; ...; slow_Ns]`.

use serde::{Deserialize, Serialize};

use super::PromptError;

pub const MAX_FAST_FRAMES: u32 = 128;
pub const MAX_SEQUENCE_LENGTH: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub n_slow_frames: u32,
    pub slow_per_frame: u32,
    pub n_fast_frames: u32,
    pub downsample_ratio: u32,
    pub fast_per_frame: u32,
    pub slow_total: u64,
    pub fast_total: u64,
    pub id_text_overhead: u64,
    pub grand_total: u64,
    pub exceeds_max_sequence: bool,
}

impl TokenBudget {
    pub fn visual_total(&self) -> u64 {
        self.slow_total + self.fast_total
    }
}

pub fn token_budget(
    n_slow: u32,
    slow_per_frame: u32,
    n_fast: u32,
    ratio: u32,
    per_frame_id_overhead: u32,
) -> Result<TokenBudget, PromptError> {
    let r2 = ratio.checked_mul(ratio).unwrap_or(0);
    if r2 == 0 || slow_per_frame % r2 != 0 {
        return Err(PromptError::InvalidConfig(format!(
            "ratio² = {r2} must divide slow_per_frame = {slow_per_frame}"
        )));
    }
    if n_fast > MAX_FAST_FRAMES {
        return Err(PromptError::InvalidConfig(format!(
            "at most {MAX_FAST_FRAMES} fast frames, got {n_fast}"
        )));
    }
    let fast_per_frame = slow_per_frame / r2;
    let slow_total = n_slow as u64 * slow_per_frame as u64;
    let fast_total = n_fast as u64 * fast_per_frame as u64;
    let id_text_overhead = n_fast as u64 * per_frame_id_overhead as u64;
    let grand_total = slow_total + fast_total + id_text_overhead;
    Ok(TokenBudget {
        n_slow_frames: n_slow,
        slow_per_frame,
        n_fast_frames: n_fast,
        downsample_ratio: ratio,
        fast_per_frame,
        slow_total,
        fast_total,
        id_text_overhead,
        grand_total,
        exceeds_max_sequence: grand_total > MAX_SEQUENCE_LENGTH,
    })
}

/// Text inserted after the fast tokens of sampled frame `id`.
pub fn frame_id_text(id: u32) -> String {
    format!("This sampled frame id is {id}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceItem {
    Fast { frame: u32 },
    FrameId { frame: u32, text: String },
    Slow { keyframe: u32 },
}

pub fn interleaved_layout(n_fast: u32, n_slow: u32) -> Vec<SequenceItem> {
    let mut items = Vec::with_capacity(2 * n_fast as usize + n_slow as usize);
    for frame in 1..=n_fast {
        items.push(SequenceItem::Fast { frame });
        items.push(SequenceItem::FrameId {
            frame,
            text: frame_id_text(frame),
        });
    }
    items.extend((1..=n_slow).map(|keyframe| SequenceItem::Slow { keyframe }));
    items
}

/// Renders a layout with `<fast_j>` and `<slow_k>` placeholders for the visual tokens.
pub fn render_layout(items: &[SequenceItem]) -> String {
    items
        .iter()
        .map(|item| match item {
            SequenceItem::Fast { frame } => format!("<fast_{frame}>"),
            SequenceItem::FrameId { text, .. } => text.clone(),
            SequenceItem::Slow { keyframe } => format!("<slow_{keyframe}>"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_configuration() {
        let b = token_budget(5, 256, 128, 4, 0).unwrap();
        assert_eq!(b.fast_per_frame, 16);
        assert_eq!(b.slow_total, 1280);
        assert_eq!(b.fast_total, 2048);
        assert_eq!(b.grand_total, 3328);
        assert!(!b.exceeds_max_sequence);
    }

    #[test]
    fn zero_and_invalid() {
        let z = token_budget(0, 256, 0, 4, 0).unwrap();
        assert_eq!((z.slow_total, z.fast_total, z.grand_total), (0, 0, 0));
        assert!(matches!(
            token_budget(5, 256, 128, 3, 0),
            Err(PromptError::InvalidConfig(_))
        ));
        assert!(token_budget(5, 256, 129, 4, 0).is_err());
        assert!(token_budget(5, 256, 16, 0, 0).is_err());
    }

    #[test]
    fn overhead_and_overflow_flag() {
        let b = token_budget(5, 256, 128, 4, 8).unwrap();
        assert_eq!(b.id_text_overhead, 1024);
        assert_eq!(b.grand_total, 4352);
        let big = token_budget(20, 1024, 128, 2, 10).unwrap();
        assert!(big.exceeds_max_sequence);
    }

    #[test]
    fn layout_interleaves_ids() {
        let items = interleaved_layout(2, 1);
        assert_eq!(
            render_layout(&items),
            "<fast_1>This sampled frame id is 1<fast_2>This sampled frame id is 2<slow_1>"
        );
        assert_eq!(frame_id_text(26), "This sampled frame id is 26");
    }
}
