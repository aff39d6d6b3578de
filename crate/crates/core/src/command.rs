//! Classifies artist text into direct commands or painting prompts.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectCommand {
    Stop,
    Pause,
    Resume,
    ChangeColors,
    MoveAway,
    ComeBack,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    Direct(DirectCommand),
    PaintPrompt(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommandError {
    #[error("command text is empty")]
    EmptyInput,
}

/// Reserved phrases, matched exactly after normalization.
pub const DIRECT_GRAMMAR: &[(&str, DirectCommand)] = &[
    ("stop", DirectCommand::Stop),
    ("stop painting", DirectCommand::Stop),
    ("pause", DirectCommand::Pause),
    ("resume", DirectCommand::Resume),
    ("continue", DirectCommand::Resume),
    ("change colors", DirectCommand::ChangeColors),
    ("change color", DirectCommand::ChangeColors),
    ("move away", DirectCommand::MoveAway),
    ("come back", DirectCommand::ComeBack),
];

/// Lowercases, trims and collapses runs of whitespace to one space.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

pub fn parse_command(text: &str) -> Result<Command, CommandError> {
    let norm = normalize(text);
    if norm.is_empty() {
        return Err(CommandError::EmptyInput);
    }
    Ok(DIRECT_GRAMMAR
        .iter()
        .find(|(phrase, _)| *phrase == norm)
        .map_or(Command::PaintPrompt(norm), |(_, cmd)| Command::Direct(*cmd)))
}
