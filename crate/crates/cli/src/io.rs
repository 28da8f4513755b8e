use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use linkgram::grammar::Lexicon;

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn lexicon(path: &Path) -> Result<Arc<Lexicon>> {
    let text = read(path)?;
    let lex = Lexicon::parse(&text).with_context(|| format!("in lexicon {}", path.display()))?;
    Ok(Arc::new(lex))
}

/// Whitespace-tokenized sentences, one per non-blank line.
pub fn sentences(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(String::from).collect())
        .collect()
}

/// Destinations collected while a command runs and written only once it
/// has validated everything; `None` is standard output.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(Option<PathBuf>, String)>,
}

impl Outputs {
    /// Fails early if a destination's directory does not exist.
    pub fn check(paths: &[Option<&PathBuf>]) -> Result<()> {
        for p in paths.iter().flatten() {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty());
            if let Some(d) = dir {
                if !d.is_dir() {
                    bail!("output directory {} does not exist", d.display());
                }
            }
        }
        Ok(())
    }

    pub fn push(&mut self, path: Option<&PathBuf>, text: String) {
        self.files.push((path.cloned(), text));
    }

    pub fn write(self) -> Result<()> {
        for (path, text) in self.files {
            match path {
                Some(p) => {
                    fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?
                }
                None => {
                    let mut out = std::io::stdout().lock();
                    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
                        r => r?,
                    }
                }
            }
        }
        Ok(())
    }
}
