//! CSV and JSON persistence.
//!
//! CSV files start with optional `# key=value` metadata lines followed by a
//! mandatory header row. Floats are written in shortest round-trip form.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::geom::{Point2, Rect};
use crate::mph::{FeatureKey, PersistenceDiagram, PersistenceRecord};
use crate::tessellate::{SliceCloud, SliceStack};
use crate::vineyard::Vineyard;
use crate::{Error, Result};

/// `# key=value` lines at the top of a CSV file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata(pub BTreeMap<String, String>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }

    fn parse(text: &str) -> Self {
        let mut m = Self::default();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            if let Some((k, v)) = rest.trim().split_once('=') {
                m.0.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        m
    }
}

fn parse_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn format_window(w: &Rect<f64>) -> String {
    format!("{},{},{},{}", w.min.x, w.min.y, w.max.x, w.max.y)
}

fn parse_window(s: &str) -> Option<Rect<f64>> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
    (v.len() == 4).then(|| Rect::new(Point2::new(v[0], v[1]), Point2::new(v[2], v[3])))
}

/// Writes a stack as `slice_index,height,x,y[,label][,area]`.
pub fn write_stack_csv<W: Write>(w: &mut W, stack: &SliceStack<f64>, meta: &Metadata) -> Result<()> {
    let labeled = stack.is_labeled();
    let with_area = !stack.slices.is_empty() && stack.slices.iter().all(|s| s.areas.is_some());
    meta.clone().with("window", format_window(&stack.window)).write(w)?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["slice_index", "height", "x", "y"];
    if labeled {
        header.push("label");
    }
    if with_area {
        header.push("area");
    }
    out.write_record(&header)?;
    for (k, s) in stack.slices.iter().enumerate() {
        for (i, p) in s.points.iter().enumerate() {
            let mut row = vec![k.to_string(), s.height.to_string(), p.x.to_string(), p.y.to_string()];
            if let Some(l) = s.labels.as_ref().filter(|_| labeled) {
                row.push(l[i].to_string());
            }
            if let Some(a) = s.areas.as_ref().filter(|_| with_area) {
                row.push(a[i].to_string());
            }
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Column names used when reading a stack CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct StackSchema {
    pub slice: String,
    /// When absent, the height of slice `k` is `(k + 1) * spacing`.
    pub height: Option<String>,
    pub x: String,
    pub y: String,
    pub label: Option<String>,
    pub area: Option<String>,
    pub spacing: f64,
}

impl Default for StackSchema {
    fn default() -> Self {
        Self {
            slice: "slice_index".into(),
            height: Some("height".into()),
            x: "x".into(),
            y: "y".into(),
            label: Some("label".into()),
            area: Some("area".into()),
            spacing: 1.0,
        }
    }
}

struct Row {
    line: u64,
    slice: i64,
    height: f64,
    p: Point2<f64>,
    label: Option<u64>,
    area: Option<f64>,
}

/// Reads and validates a stack CSV. The window is taken from the `window`
/// metadata line, then from `window`, and otherwise is the bounding box of
/// the points. Optional columns named in `schema` are used when present.
pub fn read_stack_csv(
    text: &str,
    path: &str,
    schema: &StackSchema,
    window: Option<Rect<f64>>,
) -> Result<(SliceStack<f64>, Metadata)> {
    let meta = Metadata::parse(text);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| parse_err(path, 1, format!("missing column '{name}'")));
    let c_slice = need(&schema.slice)?;
    let c_x = need(&schema.x)?;
    let c_y = need(&schema.y)?;
    let c_h = schema.height.as_deref().and_then(col);
    let c_label = schema.label.as_deref().and_then(col);
    let c_area = schema.area.as_deref().and_then(col);

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |c: usize| rec.get(c).ok_or_else(|| parse_err(path, line, "row is missing a field"));
        let num = |c: usize, what: &str| -> Result<f64> {
            let s = field(c)?;
            let v: f64 = s.parse().map_err(|_| parse_err(path, line, format!("invalid {what} '{s}'")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite {what}")));
            }
            Ok(v)
        };
        let slice: i64 = field(c_slice)?
            .parse()
            .map_err(|_| parse_err(path, line, format!("invalid slice index '{}'", &rec[c_slice])))?;
        if slice < 0 {
            return Err(parse_err(path, line, "negative slice index"));
        }
        let height = match c_h {
            Some(c) => num(c, "height")?,
            None => (slice + 1) as f64 * schema.spacing,
        };
        let label = match c_label {
            Some(c) if !field(c)?.is_empty() => Some(
                field(c)?
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("invalid label '{}'", &rec[c])))?,
            ),
            _ => None,
        };
        let area = match c_area {
            Some(c) if !field(c)?.is_empty() => Some(num(c, "area")?),
            _ => None,
        };
        rows.push(Row {
            line,
            slice,
            height,
            p: Point2::new(num(c_x, "x")?, num(c_y, "y")?),
            label,
            area,
        });
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    if rows.iter().any(|r| r.label.is_some()) {
        if let Some(r) = rows.iter().find(|r| r.label.is_none()) {
            return Err(parse_err(path, r.line, "label missing while other rows have one"));
        }
    }
    let with_area = rows.iter().all(|r| r.area.is_some());

    let window = meta
        .get("window")
        .and_then(parse_window)
        .or(window)
        .unwrap_or_else(|| {
            let (mut lo, mut hi) = (rows[0].p, rows[0].p);
            for r in &rows {
                lo = Point2::new(lo.x.min(r.p.x), lo.y.min(r.p.y));
                hi = Point2::new(hi.x.max(r.p.x), hi.y.max(r.p.y));
            }
            Rect::new(lo, hi)
        });
    if !window.is_valid() {
        return Err(parse_err(path, 1, "degenerate window"));
    }

    let mut groups: BTreeMap<i64, Vec<&Row>> = BTreeMap::new();
    for r in &rows {
        groups.entry(r.slice).or_default().push(r);
    }
    let mut slices: Vec<SliceCloud<f64>> = Vec::new();
    let mut prev: Option<(f64, u64)> = None;
    for rs in groups.values() {
        let h = rs[0].height;
        let mut seen: HashSet<(u64, u64)> = HashSet::new();
        let mut seen_labels: HashMap<u64, u64> = HashMap::new();
        for r in rs {
            if r.height != h {
                return Err(parse_err(path, r.line, format!("height {} differs from {h} in the same slice", r.height)));
            }
            if !seen.insert((r.p.x.to_bits(), r.p.y.to_bits())) {
                return Err(parse_err(path, r.line, format!("duplicate point ({}, {}) in slice {}", r.p.x, r.p.y, r.slice)));
            }
            if !window.contains(&r.p) {
                return Err(parse_err(path, r.line, format!("point ({}, {}) outside the window", r.p.x, r.p.y)));
            }
            if let Some(l) = r.label {
                if let Some(first) = seen_labels.insert(l, r.line) {
                    return Err(parse_err(path, r.line, format!("label {l} already used on line {first}")));
                }
            }
        }
        if let Some((ph, _)) = prev {
            if !(h > ph) {
                return Err(parse_err(path, rs[0].line, format!("slice heights not increasing ({h} after {ph})")));
            }
        }
        prev = Some((h, rs[0].line));
        let labels = rs[0].label.is_some().then(|| rs.iter().map(|r| r.label.unwrap()).collect());
        let areas = with_area.then(|| rs.iter().map(|r| r.area.unwrap()).collect());
        slices.push(SliceCloud {
            height: h,
            points: rs.iter().map(|r| r.p).collect(),
            labels,
            areas,
        });
    }
    Ok((SliceStack { window, slices }, meta))
}

/// Writes diagrams as `slice_index,dim,birth,death,key_a,key_b,size`.
pub fn write_diagrams_csv<W: Write>(w: &mut W, diagrams: &[PersistenceDiagram<f64>], meta: &Metadata) -> Result<()> {
    meta.write(w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["slice_index", "dim", "birth", "death", "key_a", "key_b", "size"])?;
    for (k, d) in diagrams.iter().enumerate() {
        for r in &d.records {
            let (a, b) = r.key.parts();
            out.write_record([
                k.to_string(),
                r.dim.to_string(),
                r.birth.to_string(),
                r.death.to_string(),
                a.to_string(),
                b.map_or(String::new(), |b| b.to_string()),
                r.size.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a diagram CSV. `slices` is the number of diagrams to return (slices
/// without records are empty); `None` uses the largest index present.
pub fn read_diagrams_csv(text: &str, path: &str, slices: Option<usize>) -> Result<Vec<PersistenceDiagram<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out: Vec<PersistenceDiagram<f64>> = vec![PersistenceDiagram::default(); slices.unwrap_or(0)];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < 7 {
            return Err(parse_err(path, line, "expected 7 fields"));
        }
        let bad = |what: &str| parse_err(path, line, format!("invalid {what} '{}'", what_of(&rec, what)));
        let k: usize = rec[0].parse().map_err(|_| bad("slice_index"))?;
        let dim: u8 = rec[1].parse().map_err(|_| bad("dim"))?;
        let birth: f64 = rec[2].parse().map_err(|_| bad("birth"))?;
        let death: f64 = rec[3].parse().map_err(|_| bad("death"))?;
        let a: u64 = rec[4].parse().map_err(|_| bad("key_a"))?;
        let size: f64 = rec[6].parse().map_err(|_| bad("size"))?;
        let key = match dim {
            0 => FeatureKey::Point(a),
            1 => FeatureKey::Edge(a, rec[5].parse().map_err(|_| bad("key_b"))?),
            _ => return Err(parse_err(path, line, format!("unsupported dimension {dim}"))),
        };
        if slices.is_some_and(|n| k >= n) {
            return Err(parse_err(path, line, format!("slice index {k} out of range")));
        }
        if k >= out.len() {
            out.resize(k + 1, PersistenceDiagram::default());
        }
        out[k].records.push(PersistenceRecord {
            dim,
            birth,
            death,
            key,
            size,
        });
    }
    Ok(out)
}

fn what_of<'a>(rec: &'a csv::StringRecord, what: &str) -> &'a str {
    let idx = ["slice_index", "dim", "birth", "death", "key_a", "key_b", "size"]
        .iter()
        .position(|&c| c == what)
        .unwrap_or(0);
    rec.get(idx).unwrap_or("")
}

/// Writes `dim,key_a,key_b,first_slice,slices,length` for every vine.
pub fn write_vines_csv<W: Write>(w: &mut W, v: &Vineyard<f64>, edge_count: bool, meta: &Metadata) -> Result<()> {
    meta.write(w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["dim", "key_a", "key_b", "first_slice", "slices", "length"])?;
    for vine in &v.vines {
        let (a, b) = vine.key.parts();
        let n = vine.entries.len();
        out.write_record([
            vine.dim.to_string(),
            a.to_string(),
            b.map_or(String::new(), |b| b.to_string()),
            vine.entries[0].slice.to_string(),
            n.to_string(),
            (if edge_count { n - 1 } else { n }).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes named numeric columns of equal length.
pub fn write_columns_csv<W: Write>(w: &mut W, columns: &[(&str, &[f64])], meta: &Metadata) -> Result<()> {
    meta.write(w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(columns.iter().map(|c| c.0))?;
    let n = columns.iter().map(|c| c.1.len()).min().unwrap_or(0);
    for i in 0..n {
        out.write_record(columns.iter().map(|c| c.1[i].to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_stack() -> SliceStack<f64> {
        SliceStack {
            window: Rect::centered_square(10.0),
            slices: vec![
                SliceCloud {
                    height: 1.5,
                    points: vec![Point2::new(0.1, 1.0 / 3.0), Point2::new(-4.0, 2.0)],
                    labels: Some(vec![3, 7]),
                    areas: Some(vec![40.0, 60.0]),
                },
                SliceCloud {
                    height: 2.5,
                    points: vec![Point2::new(1e-17, 4.999)],
                    labels: Some(vec![3]),
                    areas: Some(vec![100.0]),
                },
            ],
        }
    }

    #[test]
    fn stack_round_trip() {
        let s = sample_stack();
        let mut buf = Vec::new();
        write_stack_csv(&mut buf, &s, &Metadata::new().with("seed", 9)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (back, meta) = read_stack_csv(&text, "t.csv", &StackSchema::default(), None).unwrap();
        assert_eq!(back, s);
        assert_eq!(meta.get("seed"), Some("9"));
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SliceStack<f64>>(&json).unwrap(), s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "# seed=1\nslice_index,height,x,y\n0,1,0,0\n0,1,1,1\n0,1,0,0\n";
        match read_stack_csv(text, "d.csv", &StackSchema::default(), Some(Rect::centered_square(4.0))) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 5, "{message}");
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = "slice_index,height,x,y\n0,1,0,0\n1,abc,0,0\n";
        assert!(matches!(
            read_stack_csv(text, "d.csv", &StackSchema::default(), None),
            Err(Error::Parse { line: 3, .. })
        ));
        let text = "slice_index,height,x,y\n0,2,0,0\n1,1,1,1\n";
        assert!(matches!(
            read_stack_csv(text, "d.csv", &StackSchema::default(), None),
            Err(Error::Parse { line: 3, .. })
        ));
        let text = "slice_index,height,x\n0,2,0\n";
        assert!(read_stack_csv(text, "d.csv", &StackSchema::default(), None).is_err());
    }

    #[test]
    fn outside_window_rejected() {
        let text = "slice_index,height,x,y\n0,1,0,0\n0,1,9,0\n";
        assert!(matches!(
            read_stack_csv(text, "d.csv", &StackSchema::default(), Some(Rect::centered_square(4.0))),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn diagram_round_trip() {
        let d = vec![
            PersistenceDiagram {
                records: vec![
                    PersistenceRecord {
                        dim: 0,
                        birth: 0.0,
                        death: 0.5,
                        key: FeatureKey::Point(2),
                        size: 1.0,
                    },
                    PersistenceRecord {
                        dim: 1,
                        birth: 0.5,
                        death: 1.0 / 3f64.sqrt(),
                        key: FeatureKey::Edge(0, 1),
                        size: 1.0,
                    },
                ],
            },
            PersistenceDiagram::default(),
        ];
        let mut buf = Vec::new();
        write_diagrams_csv(&mut buf, &d, &Metadata::new().with("config_hash", "abc")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(read_diagrams_csv(&text, "d", Some(2)).unwrap(), d);
    }
}
