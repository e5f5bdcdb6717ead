use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Measured and reported, not asserted.
    Info,
    Skip,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub defect: f64,
    pub tolerance: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub digest: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn new(command: impl Into<String>, digest: String) -> Self {
        RunReport {
            command: command.into(),
            digest,
            checks: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    /// Asserted check: passes when `defect <= tol`.
    pub fn check(&mut self, name: impl Into<String>, defect: f64, tol: f64) {
        let status = if defect <= tol { Status::Pass } else { Status::Fail };
        self.push(name, status, defect, Some(tol), String::new());
    }

    /// Structural check, defect is a mismatch count.
    pub fn count(&mut self, name: impl Into<String>, mismatches: usize) {
        self.check(name, mismatches as f64, 0.0);
    }

    pub fn info(&mut self, name: impl Into<String>, value: f64, note: impl Into<String>) {
        self.push(name, Status::Info, value, None, note.into());
    }

    pub fn skip(&mut self, name: impl Into<String>, note: impl Into<String>) {
        self.push(name, Status::Skip, f64::NAN, None, note.into());
    }

    fn push(&mut self, name: impl Into<String>, status: Status, defect: f64, tolerance: Option<f64>, note: String) {
        self.checks.push(Check {
            name: name.into(),
            status,
            defect,
            tolerance,
            note,
        });
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        let _ = writeln!(s, "input sha256: {}", self.digest);
        for n in &self.notes {
            let _ = writeln!(s, "{n}");
        }
        let _ = writeln!(s);
        for c in &self.checks {
            let tol = c.tolerance.map_or("-".to_string(), |t| format!("{t:e}"));
            let _ = write!(s, "[{}] {}  defect={:e}  tol={}", c.status.as_str(), c.name, c.defect, tol);
            if !c.note.is_empty() {
                let _ = write!(s, "  ({})", c.note);
            }
            let _ = writeln!(s);
        }
        let count = |st| self.checks.iter().filter(|c| c.status == st).count();
        let _ = writeln!(
            s,
            "\n{} pass, {} fail, {} info, {} skip",
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Info),
            count(Status::Skip)
        );
        let _ = writeln!(s, "elapsed: {:.3}s", self.elapsed.as_secs_f64());
        s
    }

    /// `report.txt`, `checks.csv` and one CSV per table.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.txt"), self.render())?;
        let mut checks = Table::new("checks", &["name", "status", "defect", "tolerance", "note"]);
        for c in &self.checks {
            checks.push(vec![
                c.name.clone(),
                c.status.as_str().into(),
                c.defect.to_string(),
                c.tolerance.map_or(String::new(), |t| t.to_string()),
                c.note.clone(),
            ]);
        }
        for t in std::iter::once(&checks).chain(&self.tables) {
            let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", t.name)))?;
            w.write_record(&t.header)?;
            for row in &t.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}
