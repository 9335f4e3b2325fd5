//! Text checkpoint format: a version line, then for every parameter in
//! store order a `name rows cols` line followed by one line per row with
//! 17 significant digits per value, which round-trips `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::ParameterStore;

pub const CHECKPOINT_VERSION: &str = "trajgcn-checkpoint-v1";

pub fn format_checkpoint(store: &ParameterStore) -> String {
    let mut out = String::new();
    out.push_str(CHECKPOINT_VERSION);
    out.push('\n');
    for entry in store.iter() {
        writeln!(out, "{} {} {}", entry.name, entry.value.rows(), entry.value.cols())
            .expect("writing to string cannot fail");
        for r in 0..entry.value.rows() {
            for c in 0..entry.value.cols() {
                if c > 0 {
                    out.push(' ');
                }
                write!(out, "{:.16e}", entry.value.get(r, c))
                    .expect("writing to string cannot fail");
            }
            out.push('\n');
        }
    }
    out
}

pub fn save_checkpoint(path: &Path, store: &ParameterStore) -> Result<()> {
    std::fs::write(path, format_checkpoint(store))?;
    Ok(())
}

/// Loads parameter values into an existing store (built from the run
/// configuration). Every stored parameter must be present with a matching
/// shape, and the file may not contain extras.
pub fn parse_checkpoint(text: &str, store: &mut ParameterStore) -> Result<()> {
    let mut lines = text.lines();
    let version = lines
        .next()
        .ok_or_else(|| Error::data("empty checkpoint".to_string()))?;
    if version.trim() != CHECKPOINT_VERSION {
        return Err(Error::data(format!(
            "unsupported checkpoint version '{}', expected '{CHECKPOINT_VERSION}'",
            version.trim()
        )));
    }
    let mut seen = 0usize;
    while let Some(header) = lines.next() {
        let header = header.trim();
        if header.is_empty() {
            continue;
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::data(format!("bad parameter header '{header}'")));
        }
        let name = fields[0];
        let rows: usize = fields[1]
            .parse()
            .map_err(|_| Error::data(format!("bad row count for '{name}'")))?;
        let cols: usize = fields[2]
            .parse()
            .map_err(|_| Error::data(format!("bad column count for '{name}'")))?;
        let id = store
            .find(name)
            .ok_or_else(|| Error::data(format!("checkpoint parameter '{name}' not in model")))?;
        if store.value(id).shape() != (rows, cols) {
            return Err(Error::data(format!(
                "checkpoint parameter '{name}' is {rows}x{cols}, model expects {}x{}",
                store.value(id).rows(),
                store.value(id).cols()
            )));
        }
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::data(format!("truncated values for '{name}'")))?;
            let values: Vec<&str> = line.split_whitespace().collect();
            if values.len() != cols {
                return Err(Error::data(format!(
                    "row {r} of '{name}' has {} values, expected {cols}",
                    values.len()
                )));
            }
            for (c, field) in values.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::data(format!("bad value in '{name}' row {r}")))?;
                store.value_mut(id).set(r, c, v);
            }
        }
        seen += 1;
    }
    if seen != store.len() {
        return Err(Error::data(format!(
            "checkpoint holds {seen} parameters, model has {}",
            store.len()
        )));
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path, store: &mut ParameterStore) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_checkpoint(&text, store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::{ModelConfig, MotionGcn};
    use crate::rng::SeededRng;

    fn small_model(seed: u64) -> MotionGcn {
        let mut model = MotionGcn::new(&ModelConfig::new(3, 4, 6, 1)).unwrap();
        model.init_parameters(&mut SeededRng::new(seed));
        model
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let model = small_model(7);
        let text = format_checkpoint(model.params());
        let mut fresh = small_model(8);
        parse_checkpoint(&text, fresh.params_mut()).unwrap();
        for (a, b) in model.params().iter().zip(fresh.params().iter()) {
            assert_eq!(a.value, b.value, "parameter {}", a.name);
        }
        assert_eq!(format_checkpoint(fresh.params()), text);
    }

    #[test]
    fn rejects_wrong_version_and_mismatches() {
        let model = small_model(7);
        let text = format_checkpoint(model.params());
        let mut other = small_model(1);

        let bad_version = text.replacen(CHECKPOINT_VERSION, "other-v9", 1);
        assert!(parse_checkpoint(&bad_version, other.params_mut()).is_err());

        let truncated: String =
            text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(parse_checkpoint(&truncated, other.params_mut()).is_err());

        let mut bigger = MotionGcn::new(&ModelConfig::new(3, 4, 6, 2)).unwrap();
        assert!(parse_checkpoint(&text, bigger.params_mut()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = small_model(3);
        save_checkpoint(&path, model.params()).unwrap();
        let mut fresh = small_model(99);
        load_checkpoint(&path, fresh.params_mut()).unwrap();
        for (a, b) in model.params().iter().zip(fresh.params().iter()) {
            assert_eq!(a.value, b.value);
        }
    }
}
