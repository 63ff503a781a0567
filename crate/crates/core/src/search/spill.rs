//! Accumulates `(code, e)` candidates under a memory budget, spilling sorted
//! runs to disk and merging them at the end.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::PathBuf;

use crate::poset::CanonicalCode;

pub(crate) type Entry = (CanonicalCode, u64);

const ENTRY_BYTES: usize = std::mem::size_of::<Entry>();

pub(crate) struct SetBuilder {
    n: usize,
    limit: usize,
    items: Vec<Entry>,
    runs: Vec<File>,
    dir: Option<PathBuf>,
}

fn sort_dedup(items: &mut Vec<Entry>) {
    items.sort_unstable_by_key(|e| e.0);
    items.dedup_by(|a, b| a.0 == b.0);
}

impl SetBuilder {
    pub fn new(n: usize, mem_budget: usize, dir: Option<PathBuf>) -> Self {
        SetBuilder {
            n,
            limit: (mem_budget / ENTRY_BYTES).max(1024),
            items: Vec::new(),
            runs: Vec::new(),
            dir,
        }
    }

    pub fn extend(&mut self, batch: impl IntoIterator<Item = Entry>) -> io::Result<()> {
        self.items.extend(batch);
        if self.items.len() >= self.limit {
            sort_dedup(&mut self.items);
            if self.items.len() >= self.limit / 2 {
                self.spill()?;
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub fn spilled_runs(&self) -> usize {
        self.runs.len()
    }

    fn spill(&mut self) -> io::Result<()> {
        let mut file = match &self.dir {
            Some(d) => tempfile::tempfile_in(d)?,
            None => tempfile::tempfile()?,
        };
        {
            let mut w = BufWriter::new(&mut file);
            for (code, e) in self.items.drain(..) {
                w.write_all(code.as_bytes())?;
                w.write_all(&e.to_le_bytes())?;
            }
            w.flush()?;
        }
        file.seek(SeekFrom::Start(0))?;
        self.runs.push(file);
        Ok(())
    }

    /// Sorted, deduplicated contents.
    pub fn finish(mut self) -> io::Result<Vec<Entry>> {
        sort_dedup(&mut self.items);
        if self.runs.is_empty() {
            return Ok(self.items);
        }
        let width = 2 * self.n;
        let mut readers: Vec<RunReader> = self
            .runs
            .into_iter()
            .map(|f| RunReader {
                inner: BufReader::new(f),
                buf: vec![0; width + 8],
                n: self.n,
            })
            .collect();
        let mut heap = BinaryHeap::new();
        for (i, r) in readers.iter_mut().enumerate() {
            if let Some(e) = r.next_entry()? {
                heap.push(Reverse((e.0, i, e.1)));
            }
        }
        let mut memory = self.items.into_iter().peekable();
        let mut out: Vec<Entry> = Vec::new();
        let push = |out: &mut Vec<Entry>, e: Entry| {
            if out.last().is_none_or(|l| l.0 != e.0) {
                out.push(e);
            }
        };
        loop {
            let from_disk = heap.peek().map(|Reverse((c, _, _))| *c);
            let from_memory = memory.peek().map(|e| e.0);
            match (from_disk, from_memory) {
                (None, None) => break,
                (Some(d), m) if m.is_none_or(|m| d <= m) => {
                    let Reverse((code, i, e)) = heap.pop().unwrap();
                    push(&mut out, (code, e));
                    if let Some(next) = readers[i].next_entry()? {
                        heap.push(Reverse((next.0, i, next.1)));
                    }
                }
                _ => push(&mut out, memory.next().unwrap()),
            }
        }
        Ok(out)
    }
}

struct RunReader {
    inner: BufReader<File>,
    buf: Vec<u8>,
    n: usize,
}

impl RunReader {
    fn next_entry(&mut self) -> io::Result<Option<Entry>> {
        match self.inner.read_exact(&mut self.buf) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e),
        }
        let width = 2 * self.n;
        let code = CanonicalCode::from_bytes(self.n, &self.buf[..width])
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "bad spilled code"))?;
        let e = u64::from_le_bytes(self.buf[width..].try_into().unwrap());
        Ok(Some((code, e)))
    }
}
