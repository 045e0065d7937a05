//! Line-oriented cycle trace.

use std::fmt::Display;
use std::io::{self, Write};

use dbpim_core::{TraceEvent, TraceSink};

fn list<T: Display>(xs: &[T]) -> String {
    let parts: Vec<String> = xs.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(","))
}

/// Writes one line per simulator event. The first IO error is kept and
/// later events are dropped.
pub struct TextTrace<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> TextTrace<W> {
    pub fn new(out: W) -> Self {
        TextTrace { out, error: None }
    }

    /// Free-form header line, e.g. the layer and batch index.
    pub fn note(&mut self, line: &str) {
        self.write(format_args!("# {line}"));
    }

    fn write(&mut self, line: std::fmt::Arguments<'_>) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{line}") {
                self.error = Some(e);
            }
        }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for TextTrace<W> {
    fn event(&mut self, event: &TraceEvent<'_>) {
        match *event {
            TraceEvent::Skip { filter } => self.write(format_args!("skip-filter filter={filter}")),
            TraceEvent::Load { pass, macro_index, rows } => {
                self.write(format_args!("load pass={pass} macro={macro_index} rows={rows}"))
            }
            TraceEvent::Mask { pass, row, group_masks, mask } => {
                let groups: Vec<String> = group_masks.iter().map(|g| format!("{:08b}", g.mask)).collect();
                self.write(format_args!(
                    "mask pass={pass} row={row} mask={mask:08b} groups=[{}]",
                    groups.join(",")
                ))
            }
            TraceEvent::Cycle { cycle, pass, row, column, terms, psums } => self.write(format_args!(
                "cycle {cycle} pass={pass} row={row} bit={} weight={} terms={} psums={}",
                column.bit,
                column.weight,
                list(terms),
                list(psums)
            )),
            TraceEvent::SkippedCycle { pass, row, bit } => {
                self.write(format_args!("skip-cycle pass={pass} row={row} bit={bit}"))
            }
            TraceEvent::Accumulate { pass, row, accumulators } => {
                self.write(format_args!("accumulate pass={pass} row={row} acc={}", list(accumulators)))
            }
            TraceEvent::WriteBack { pass, filters, values } => self.write(format_args!(
                "writeback pass={pass} filters={} values={}",
                list(filters),
                list(values)
            )),
        }
    }
}
