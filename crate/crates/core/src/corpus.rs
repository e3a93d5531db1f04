//! Classifier-ready instances and the files they are serialized into.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{AcquiredText, ChatMessage, Role};
use crate::taxonomy::{CategoryLabel, EntityRecord, TaskId, TaxonomyScheme};

const TEMPLATES: &str = include_str!("../templates/system_instructions.toml");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no acquired text for entity {0:?}")]
    MissingText(String),
    #[error("instance {0:?} has no gold label")]
    MissingGold(String),
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationInstance {
    pub entity_id: String,
    pub input_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<CategoryLabel>,
    pub source_signature: String,
}

impl ClassificationInstance {
    /// Name and description joined by a newline; gold only for train and dev.
    pub fn new(record: &EntityRecord, description: &str, source_signature: &str) -> Self {
        Self {
            entity_id: record.entity_id.clone(),
            input_text: format!("{}\n{}", record.name, description),
            gold: record.split.is_labeled().then(|| record.label.clone()),
            source_signature: source_signature.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildOptions {
    /// Missing texts are an error instead of an empty description.
    pub strict: bool,
    /// Leave out instances whose description came back empty.
    pub drop_empty: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildOutput {
    pub instances: Vec<ClassificationInstance>,
    pub missing: usize,
    pub refusals: usize,
    pub empty: usize,
    pub dropped: usize,
}

/// Joins each record's name with its acquired text.
///
/// Gold labels are attached for train and dev records only. Output is sorted
/// by entity id.
pub fn build_instances(
    records: &[EntityRecord],
    texts: &BTreeMap<String, AcquiredText>,
    source_signature: &str,
    options: BuildOptions,
) -> Result<BuildOutput, CorpusError> {
    let mut out = BuildOutput::default();
    let mut sorted: Vec<&EntityRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));

    for record in sorted {
        let description = match texts.get(&record.entity_id) {
            Some(t) => {
                if t.refusal {
                    out.refusals += 1;
                }
                t.text.as_str()
            }
            None if options.strict => return Err(CorpusError::MissingText(record.entity_id.clone())),
            None => {
                out.missing += 1;
                ""
            }
        };
        if description.is_empty() {
            out.empty += 1;
            if options.drop_empty {
                out.dropped += 1;
                continue;
            }
        }
        out.instances.push(ClassificationInstance::new(record, description, source_signature));
    }
    if out.missing + out.refusals > 0 {
        tracing::warn!(
            missing = out.missing,
            refusals = out.refusals,
            "some instances have no description"
        );
    }
    Ok(out)
}

#[derive(Deserialize)]
struct Templates {
    version: u32,
    sic: TaskTemplate,
    healthcare: TaskTemplate,
}

#[derive(Deserialize)]
struct TaskTemplate {
    instruction: String,
}

fn templates() -> &'static Templates {
    static PARSED: OnceLock<Templates> = OnceLock::new();
    PARSED.get_or_init(|| toml::from_str(TEMPLATES).expect("bundled instruction templates parse"))
}

pub fn system_instruction_version() -> u32 {
    templates().version
}

/// The fixed system message for `scheme`, listing its category ids.
pub fn system_instruction(scheme: &TaxonomyScheme) -> String {
    let t = templates();
    let template = match scheme.task() {
        TaskId::Sic => &t.sic.instruction,
        TaskId::Healthcare => &t.healthcare.instruction,
    };
    template.replace("{codes}", &scheme.ids().join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatFineTuneRecord {
    pub messages: Vec<ChatMessage>,
}

impl ChatFineTuneRecord {
    pub fn from_instance(
        instance: &ClassificationInstance,
        system: &str,
        with_label: bool,
    ) -> Result<Self, CorpusError> {
        let mut messages = vec![
            ChatMessage::system(system),
            ChatMessage::user(instance.input_text.as_str()),
        ];
        if with_label {
            let gold = instance
                .gold
                .as_ref()
                .ok_or_else(|| CorpusError::MissingGold(instance.entity_id.clone()))?;
            messages.push(ChatMessage::assistant(gold.id.as_str()));
        }
        Ok(Self { messages })
    }

    /// Checks the role sequence is system, user and optionally assistant.
    pub fn validate(&self) -> Result<(), String> {
        let roles: Vec<Role> = self.messages.iter().map(|m| m.role).collect();
        match roles.as_slice() {
            [Role::System, Role::User] | [Role::System, Role::User, Role::Assistant] => Ok(()),
            other => Err(format!("unexpected role sequence {other:?}")),
        }
    }

    pub fn has_label(&self) -> bool {
        self.messages.len() == 3
    }

    /// Messages sent at inference time, without any assistant turn.
    pub fn prompt_messages(&self) -> &[ChatMessage] {
        &self.messages[..2.min(self.messages.len())]
    }

    pub fn label(&self) -> Option<&str> {
        self.messages.get(2).map(|m| m.content.as_str())
    }
}

fn write_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Writes one chat record per line. With `with_labels` every instance needs
/// a gold label, which becomes the assistant turn.
pub fn emit_chat_finetune(
    instances: &[ClassificationInstance],
    scheme: &TaxonomyScheme,
    with_labels: bool,
    out_path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    let system = system_instruction(scheme);
    let records = instances
        .iter()
        .map(|i| ChatFineTuneRecord::from_instance(i, &system, with_labels))
        .collect::<Result<Vec<_>, _>>()?;
    write_lines(out_path.as_ref(), &records)
}

pub fn read_chat_finetune(path: impl AsRef<Path>) -> Result<Vec<ChatFineTuneRecord>, CorpusError> {
    let records: Vec<ChatFineTuneRecord> = read_lines(path.as_ref())?;
    for (i, r) in records.iter().enumerate() {
        r.validate()
            .map_err(|message| CorpusError::MalformedRecord { line: i + 1, message })?;
    }
    Ok(records)
}

pub fn emit_tabular(
    instances: &[ClassificationInstance],
    out_path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    write_lines(out_path.as_ref(), instances)
}

pub fn read_tabular(path: impl AsRef<Path>) -> Result<Vec<ClassificationInstance>, CorpusError> {
    read_lines(path.as_ref())
}
