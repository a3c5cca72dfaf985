use serde::{Deserialize, Serialize};

use super::PromptError;

/// What the description model is told about the shot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotContext {
    pub video_id: String,
    pub shot_index: usize,
    #[serde(default = "default_instance")]
    pub instance_id: u32,
    pub appearance_description: String,
}

fn default_instance() -> u32 {
    1
}

pub const ACTION_PROMPT_TEMPLATE: &str = "\
You are given consecutive frames sampled from one video shot. Every frame \
carries a unique numerical frame ID in its bottom-right corner. The main \
character is marked on each frame by a colored mask labeled with instance \
ID {instance_id}. Appearance of the main character: {appearance}.

Describe the actions of instance {instance_id} over the whole shot, following \
these instructions.

## Frame Range Division
- Split the shot into consecutive frame ranges, each covering one distinct action.
- Ranges must start at the first frame ID, end at the last frame ID, and must \
not overlap or leave any frame ID uncovered.
- Merge neighbouring frames that show the same action into one range.

## Description Content
- Describe only what instance {instance_id} does and how it looks while doing it.
- Mention interacting objects or people only when the action involves them.
- Do not describe the background, the camera, or the overlaid IDs.

## Writing Style
- Use one or two concise sentences per range, in the present tense.
- Refer to the character by appearance, never by instance ID.
- Make adjacent descriptions clearly distinguishable.

## Output Format
- Output one line per range and nothing else.
- Each line reads: frames A-B: description
- A and B are frame IDs with A <= B.

## Example Output
frames 1-4: The man in a blue jacket walks toward the table holding a cup.
frames 5-9: He sets the cup down and pulls out a chair.
frames 10-12: He sits down and leans back, looking to his left.

This shot has {frame_count} sampled frames.
";

/// Fills the action-annotation template. Byte-stable for equal inputs.
pub fn build_action_prompt(context: &ShotContext, num_sampled_frames: u32) -> Result<String, PromptError> {
    if num_sampled_frames == 0 {
        return Err(PromptError::Precondition(
            "num_sampled_frames must be at least 1".into(),
        ));
    }
    let appearance = context.appearance_description.trim().trim_end_matches('.');
    Ok(ACTION_PROMPT_TEMPLATE
        .replace("{instance_id}", &context.instance_id.to_string())
        .replace("{appearance}", appearance)
        .replace("{frame_count}", &num_sampled_frames.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ShotContext {
        ShotContext {
            video_id: "v_abc".into(),
            shot_index: 0,
            instance_id: 1,
            appearance_description: "a woman in a red coat.".into(),
        }
    }

    #[test]
    fn count_slot_filled_once() {
        let p = build_action_prompt(&ctx(), 24).unwrap();
        assert_eq!(p.matches("24").count(), 1);
        assert!(p.trim_end().ends_with("This shot has 24 sampled frames."));
        for block in [
            "Frame Range Division",
            "Description Content",
            "Writing Style",
            "Output Format",
            "Example Output",
        ] {
            assert!(p.contains(&format!("## {block}")), "missing {block}");
        }
        assert!(!p.contains('{'));
        assert!(p.contains("character: a woman in a red coat.\n"));
    }

    #[test]
    fn byte_stable() {
        assert_eq!(
            build_action_prompt(&ctx(), 9).unwrap(),
            build_action_prompt(&ctx(), 9).unwrap()
        );
    }

    #[test]
    fn zero_frames_rejected() {
        assert!(matches!(
            build_action_prompt(&ctx(), 0),
            Err(PromptError::Precondition(_))
        ));
    }

    #[test]
    fn example_output_parses() {
        let example: String = ACTION_PROMPT_TEMPLATE
            .lines()
            .filter(|l| l.starts_with("frames "))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(super::super::parse_action_output(&example, 12, 2.0).unwrap().len(), 3);
    }
}
