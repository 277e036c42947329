//! Reading and writing newline-delimited stream files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};

use profile_sketch::hashing::hash_bytes;
use profile_sketch::HashSeed;

use crate::error::{CliError, CliResult};

pub const HEADER: &str = "#profile-stream v1";

/// Seed used to map string tokens to ids; fixed so files hash the same way
/// on every run.
const TOKEN_SEED: HashSeed = HashSeed(0x7072_6f66_696c_6573);

pub fn open_input(path: &str) -> CliResult<Box<dyn BufRead>> {
    if path == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
}

pub fn open_output(path: Option<&str>) -> CliResult<Box<dyn Write>> {
    match path {
        None | Some("-") => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p, e))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

/// Streams element ids out of a stream file, one line at a time.
///
/// Lines starting with `#` are comments (the optional header is one of
/// them). Every other line must hold a single id; blank lines are rejected.
pub struct StreamReader<R> {
    source: R,
    name: String,
    line: String,
    line_no: u64,
    hash_tokens: bool,
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(source: R, name: &str, hash_tokens: bool) -> Self {
        Self {
            source,
            name: name.to_string(),
            line: String::new(),
            line_no: 0,
            hash_tokens,
        }
    }

    /// Next element id, `None` at end of input.
    pub fn next_id(&mut self) -> CliResult<Option<u64>> {
        loop {
            self.line.clear();
            let read = self
                .source
                .read_line(&mut self.line)
                .map_err(|e| CliError::Data(format!("{}: line {}: {e}", self.name, self.line_no + 1)))?;
            if read == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let record = self.line.trim_end_matches(['\n', '\r']);
            if record.starts_with('#') {
                continue;
            }
            return self.parse(record).map(Some);
        }
    }

    fn parse(&self, record: &str) -> CliResult<u64> {
        let token = record.trim();
        if token.is_empty() {
            return Err(self.bad("empty record"));
        }
        if self.hash_tokens {
            return Ok(hash_bytes(TOKEN_SEED, token.as_bytes()));
        }
        token
            .parse::<u64>()
            .map_err(|_| self.bad(&format!("{token:?} is not an unsigned 64-bit id")))
    }

    fn bad(&self, what: &str) -> CliError {
        CliError::Data(format!("{}: line {}: {what}", self.name, self.line_no))
    }

    /// Calls `f` on every id in order.
    pub fn for_each(mut self, mut f: impl FnMut(u64)) -> CliResult<u64> {
        let mut count = 0;
        while let Some(x) = self.next_id()? {
            f(x);
            count += 1;
        }
        Ok(count)
    }
}

pub fn write_stream(out: &mut dyn Write, ids: &[u64], header: bool) -> io::Result<()> {
    if header {
        writeln!(out, "{HEADER}")?;
    }
    for id in ids {
        writeln!(out, "{id}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_all(text: &str, hash: bool) -> CliResult<Vec<u64>> {
        let mut ids = Vec::new();
        StreamReader::new(text.as_bytes(), "t", hash).for_each(|x| ids.push(x))?;
        Ok(ids)
    }

    #[test]
    fn header_and_comments_are_skipped() {
        assert_eq!(read_all("#profile-stream v1\n5\n# note\n7\r\n5", false).unwrap(), vec![5, 7, 5]);
    }

    #[test]
    fn parse_error_names_the_line() {
        let err = read_all("1\n2\nx\n", false).unwrap_err();
        assert!(matches!(err, CliError::Data(ref m) if m.contains("line 3")), "{err}");
        let err = read_all("1\n\n2\n", false).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(read_all("18446744073709551616\n", false).is_err());
    }

    #[test]
    fn hashed_tokens_keep_equality() {
        let ids = read_all("apple\npear\napple\n", true).unwrap();
        assert_eq!(ids[0], ids[2]);
        assert_ne!(ids[0], ids[1]);
    }
}
