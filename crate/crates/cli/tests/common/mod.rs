#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use entclass_fixtures::toy::{toy_dataset_csv, toy_entities, toy_llm_config, toy_search_config, ToyEntity};
use entclass_fixtures::{spawn_llm, spawn_search, LlmMock, MockServer};

pub struct Workspace {
    pub dir: tempfile::TempDir,
    pub search: Arc<MockServer>,
    pub llm: Arc<LlmMock>,
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

impl Workspace {
    /// Mock providers for `entities` and a config pointing at them.
    pub fn new(entities: &[ToyEntity], sources: &str) -> Self {
        let search = spawn_search(toy_search_config(&toy_entities()));
        let llm = spawn_llm(toy_llm_config(&toy_entities()));
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("toy.csv"), toy_dataset_csv(entities)).unwrap();
        let config = format!(
            r#"task = "sic"
dataset = "toy.csv"
sources = "{sources}"
seed = 0

[search]
endpoint = "{}/search"

[llm]
endpoint = "{}"
gpt_model = "gpt-mock"
poll_interval_ms = 1
max_polls = 3

[acquisition]
max_parallel = 4
cache_dir = "cache"

[acquisition.retry]
max_attempts = 2
base_backoff = 5
"#,
            search.url(),
            llm.url()
        );
        std::fs::write(dir.path().join("entclass.toml"), config).unwrap();
        Self { dir, search: Arc::new(search), llm: Arc::new(llm) }
    }

    /// A new directory holding copies of the config, dataset and cache,
    /// talking to the same providers. Runs are not copied.
    pub fn fork(&self) -> Self {
        let dir = tempfile::tempdir().unwrap();
        for file in ["entclass.toml", "toy.csv"] {
            std::fs::copy(self.path().join(file), dir.path().join(file)).unwrap();
        }
        if self.path().join("cache").exists() {
            copy_tree(&self.path().join("cache"), &dir.path().join("cache"));
        }
        Self { dir, search: self.search.clone(), llm: self.llm.clone() }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn command(&self, args: &[&str]) -> Command {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_entclass"));
        cmd.current_dir(self.path())
            .args(["--config", "entclass.toml", "--run-id", "test"])
            .args(args)
            .env("SEARCH_API_KEY", "test-search-key")
            .env("LLM_API_KEY", "test-llm-key")
            .env_remove("RUST_LOG");
        cmd
    }

    pub fn run(&self, args: &[&str]) -> Output {
        self.command(args).output().unwrap()
    }

    /// Runs and panics with stderr on a nonzero exit.
    pub fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "entclass {args:?} failed ({:?}): {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn run_file(&self, name: &str) -> PathBuf {
        self.path().join("runs/test").join(name)
    }

    pub fn read_json(&self, name: &str) -> serde_json::Value {
        serde_json::from_slice(&std::fs::read(self.run_file(name)).unwrap()).unwrap()
    }
}
