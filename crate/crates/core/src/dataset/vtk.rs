//! Legacy ASCII VTK POLYDATA: the subset needed for surface fields.
//!
//! Supported: `POINTS`, `POLYGONS`, `POINT_DATA` with `SCALARS`/`LOOKUP_TABLE`,
//! `VECTORS`/`NORMALS` and `FIELD` arrays. `VERTICES`, `LINES`,
//! `TRIANGLE_STRIPS` and `CELL_DATA` sections are skipped. Unknown point
//! arrays are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::fields::FieldQuad;
use crate::error::{Error, Result};
use crate::geometry::{SurfaceCloud, Vec3};

/// Point-data array names for the four field channels.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkArrayNames {
    pub cp: String,
    pub cfx: String,
    pub cfy: String,
    pub cfz: String,
}

impl Default for VtkArrayNames {
    fn default() -> Self {
        Self {
            cp: "Cp".into(),
            cfx: "Cfx".into(),
            cfy: "Cfy".into(),
            cfz: "Cfz".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkOptions {
    pub names: VtkArrayNames,
    /// When set, missing friction arrays are filled with zeros instead of
    /// failing. `Cp` is always required.
    pub lenient: bool,
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(lines: &[(usize, &'a str)]) -> Self {
        let items = lines
            .iter()
            .flat_map(|(ln, l)| l.split_whitespace().map(move |t| (*ln, t)))
            .collect();
        Self { items, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn last_line(&self) -> usize {
        self.items.last().map_or(0, |t| t.0)
    }

    fn next_word(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self.peek().ok_or_else(|| Error::Parse {
            line: self.last_line(),
            msg: format!("unexpected end of file, expected {what}"),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn next_count(&mut self, what: &str) -> Result<usize> {
        let (line, t) = self.next_word(what)?;
        t.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected {what}, got `{t}`"),
        })
    }

    /// Reads exactly `n` numbers belonging to array `name`.
    fn numbers(&mut self, n: usize, name: &str) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let Some((line, t)) = self.peek() else {
                return Err(Error::format(format!(
                    "array `{name}` has {} values, expected {n}",
                    out.len()
                )));
            };
            match t.parse::<f64>() {
                Ok(v) => {
                    out.push(v);
                    self.pos += 1;
                }
                Err(_) if t.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) => {
                    return Err(Error::format(format!(
                        "array `{name}` has {} values, expected {n} (next section starts at line {line})",
                        out.len()
                    )));
                }
                Err(_) => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("`{t}` is not a number in `{name}`"),
                    })
                }
            }
        }
        Ok(out)
    }

    fn skip(&mut self, n: usize, name: &str) -> Result<()> {
        self.numbers(n, name).map(|_| ())
    }
}

fn parse_header(text: &str) -> Result<(Vec<(usize, &str)>, usize)> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .collect();
    let get = |i: usize| lines.get(i).map(|l| l.1.trim()).unwrap_or("");
    if !get(0).starts_with("# vtk DataFile Version") {
        return Err(Error::Parse {
            line: 1,
            msg: "missing `# vtk DataFile Version` header".into(),
        });
    }
    if !get(2).eq_ignore_ascii_case("ASCII") {
        return Err(Error::Parse {
            line: 3,
            msg: format!("only ASCII files are supported, found `{}`", get(2)),
        });
    }
    let ds: Vec<&str> = get(3).split_whitespace().collect();
    if ds.len() != 2 || !ds[0].eq_ignore_ascii_case("DATASET") || !ds[1].eq_ignore_ascii_case("POLYDATA") {
        return Err(Error::Parse {
            line: 4,
            msg: format!("expected `DATASET POLYDATA`, found `{}`", get(3)),
        });
    }
    Ok((lines, 4))
}

/// Parses points, polygons and named point arrays from legacy VTK text.
pub fn parse_vtk_surface(text: &str, opts: &VtkOptions) -> Result<(SurfaceCloud, FieldQuad)> {
    let (lines, body_start) = parse_header(text)?;
    let mut tok = Tokens::new(&lines[body_start..]);

    let mut points: Option<Vec<Vec3>> = None;
    let mut faces: Vec<Vec<u32>> = Vec::new();
    let mut point_arrays: Vec<(String, Vec<f64>)> = Vec::new();
    let mut point_data_n: Option<usize> = None;
    // Attribute sections after CELL_DATA apply to cells and are skipped.
    let mut attribute_count: Option<(usize, bool)> = None;

    while let Some((line, word)) = tok.peek() {
        tok.pos += 1;
        match word.to_ascii_uppercase().as_str() {
            "POINTS" => {
                let n = tok.next_count("point count")?;
                let (_, ty) = tok.next_word("point data type")?;
                if !matches!(ty, "float" | "double") {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unsupported point type `{ty}`"),
                    });
                }
                let raw = tok.numbers(3 * n, "POINTS")?;
                points = Some(raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect());
            }
            "POLYGONS" => {
                let n = tok.next_count("polygon count")?;
                let size = tok.next_count("polygon list size")?;
                let mut consumed = 0;
                for _ in 0..n {
                    let k = tok.next_count("polygon vertex count")?;
                    let idx = tok.numbers(k, "POLYGONS")?;
                    faces.push(idx.iter().map(|&v| v as u32).collect());
                    consumed += k + 1;
                }
                if consumed != size {
                    return Err(Error::format(format!(
                        "POLYGONS declares size {size} but lists {consumed} entries"
                    )));
                }
            }
            "VERTICES" | "LINES" | "TRIANGLE_STRIPS" => {
                let _ = tok.next_count("cell count")?;
                let size = tok.next_count("cell list size")?;
                tok.skip(size, word)?;
            }
            "POINT_DATA" => {
                let n = tok.next_count("point data count")?;
                point_data_n = Some(n);
                attribute_count = Some((n, true));
            }
            "CELL_DATA" => {
                let n = tok.next_count("cell data count")?;
                attribute_count = Some((n, false));
            }
            "SCALARS" => {
                let (n, is_point) = attribute_count.ok_or_else(|| Error::Parse {
                    line,
                    msg: "SCALARS outside POINT_DATA/CELL_DATA".into(),
                })?;
                let (_, name) = tok.next_word("array name")?;
                let _ = tok.next_word("array type")?;
                let mut comps = 1;
                if let Some((_, t)) = tok.peek() {
                    if let Ok(c) = t.parse::<usize>() {
                        if !(1..=4).contains(&c) {
                            return Err(Error::Parse { line, msg: format!("bad component count {c}") });
                        }
                        comps = c;
                        tok.pos += 1;
                    }
                }
                if let Some((_, t)) = tok.peek() {
                    if t.eq_ignore_ascii_case("LOOKUP_TABLE") {
                        tok.pos += 1;
                        tok.next_word("lookup table name")?;
                    }
                }
                let values = tok.numbers(n * comps, name)?;
                if is_point && comps == 1 {
                    point_arrays.push((name.to_string(), values));
                }
            }
            "LOOKUP_TABLE" => {
                // Standalone colour table: name, size, then 4 values per entry.
                let _ = tok.next_word("lookup table name")?;
                let size = tok.next_count("lookup table size")?;
                tok.skip(4 * size, "LOOKUP_TABLE")?;
            }
            "VECTORS" | "NORMALS" => {
                let (n, _) = attribute_count.ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("{word} outside POINT_DATA/CELL_DATA"),
                })?;
                let (_, name) = tok.next_word("array name")?;
                let _ = tok.next_word("array type")?;
                tok.skip(3 * n, name)?;
            }
            "FIELD" => {
                let (n_default, is_point) = attribute_count.unwrap_or((0, false));
                let _ = tok.next_word("field name")?;
                let arrays = tok.next_count("field array count")?;
                for _ in 0..arrays {
                    let (_, name) = tok.next_word("field array name")?;
                    let comps = tok.next_count("component count")?;
                    let tuples = tok.next_count("tuple count")?;
                    let _ = tok.next_word("field array type")?;
                    let values = tok.numbers(comps * tuples, name)?;
                    if is_point && comps == 1 && tuples == n_default {
                        point_arrays.push((name.to_string(), values));
                    }
                }
            }
            "METADATA" => {
                return Err(Error::Parse {
                    line,
                    msg: "METADATA blocks are not supported".into(),
                })
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unexpected token `{word}`"),
                })
            }
        }
    }

    let points = points.ok_or_else(|| Error::format("file has no POINTS section"))?;
    let n = points.len();
    if let Some(pd) = point_data_n {
        if pd != n {
            return Err(Error::format(format!("POINT_DATA has {pd} entries but there are {n} points")));
        }
    }

    let find = |name: &str| point_arrays.iter().find(|(k, _)| k == name).map(|(_, v)| v.clone());
    let required = |name: &str, always: bool| -> Result<Vec<f64>> {
        match find(name) {
            Some(v) => Ok(v),
            None if opts.lenient && !always => Ok(vec![0.0; n]),
            None => Err(Error::format(format!("required point array `{name}` is missing"))),
        }
    };
    let fields = FieldQuad {
        cp: required(&opts.names.cp, true)?,
        cfx: required(&opts.names.cfx, false)?,
        cfy: required(&opts.names.cfy, false)?,
        cfz: required(&opts.names.cfz, false)?,
    };

    let mut cloud = SurfaceCloud::from_faces(points.clone(), faces)?;
    if outward_votes(&cloud) < 0 {
        let flipped = cloud.faces.iter().map(|f| f.iter().rev().copied().collect()).collect();
        cloud = SurfaceCloud::from_faces(points, flipped)?;
    }
    Ok((cloud, fields))
}

/// Outward-minus-inward polygon count, judged against the point centroid.
fn outward_votes(cloud: &SurfaceCloud) -> i64 {
    let n = cloud.points.len().max(1) as f64;
    let mut centroid = [0.0; 3];
    for p in &cloud.points {
        for d in 0..3 {
            centroid[d] += p[d] / n;
        }
    }
    let mut votes = 0i64;
    for f in &cloud.faces {
        let k = f.len() as f64;
        let mut center = [0.0; 3];
        let mut va = [0.0; 3];
        for (j, &i) in f.iter().enumerate() {
            let a = cloud.points[i as usize];
            let b = cloud.points[f[(j + 1) % f.len()] as usize];
            for d in 0..3 {
                center[d] += a[d] / k;
            }
            va[0] += a[1] * b[2] - a[2] * b[1];
            va[1] += a[2] * b[0] - a[0] * b[2];
            va[2] += a[0] * b[1] - a[1] * b[0];
        }
        let dot: f64 = (0..3).map(|d| (center[d] - centroid[d]) * va[d]).sum();
        if dot > 0.0 {
            votes += 1;
        } else if dot < 0.0 {
            votes -= 1;
        }
    }
    votes
}

pub fn read_vtk_surface(path: impl AsRef<Path>, opts: &VtkOptions) -> Result<(SurfaceCloud, FieldQuad)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (cloud, fields) = parse_vtk_surface(&text, opts)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((cloud.with_id(id), fields))
}

/// Writes the cloud's polygons plus field arrays (and any extra point
/// arrays) as legacy ASCII VTK. Values are written with round-trip precision.
pub fn format_vtk_surface(
    cloud: &SurfaceCloud,
    fields: &FieldQuad,
    names: &VtkArrayNames,
    extra: &[(&str, &[f64])],
) -> Result<String> {
    let n = cloud.len();
    if fields.len() != n || extra.iter().any(|(_, v)| v.len() != n) {
        return Err(Error::shape("point arrays must match the point count"));
    }
    let mut s = String::new();
    let title = if cloud.geometry_id.is_empty() { "surface" } else { &cloud.geometry_id };
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET POLYDATA");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &cloud.points {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    if !cloud.faces.is_empty() {
        let size: usize = cloud.faces.iter().map(|f| f.len() + 1).sum();
        let _ = writeln!(s, "POLYGONS {} {size}", cloud.faces.len());
        for f in &cloud.faces {
            let idx: Vec<String> = f.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{} {}", f.len(), idx.join(" "));
        }
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let arrays = [
        (names.cp.as_str(), fields.cp.as_slice()),
        (names.cfx.as_str(), fields.cfx.as_slice()),
        (names.cfy.as_str(), fields.cfy.as_slice()),
        (names.cfz.as_str(), fields.cfz.as_slice()),
    ];
    for (name, values) in arrays.iter().chain(extra.iter()) {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values.iter() {
            let _ = writeln!(s, "{v}");
        }
    }
    Ok(s)
}

pub fn write_vtk_surface(
    path: impl AsRef<Path>,
    cloud: &SurfaceCloud,
    fields: &FieldQuad,
    names: &VtkArrayNames,
    extra: &[(&str, &[f64])],
) -> Result<()> {
    let path = path.as_ref();
    let text = format_vtk_surface(cloud, fields, names, extra)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TRIANGLE: &str = "# vtk DataFile Version 3.0
fixture
ASCII
DATASET POLYDATA
POINTS 3 float
0 0 0
1 0 0
0 1 0
POLYGONS 1 4
3 0 1 2
POINT_DATA 3
SCALARS Cp float 1
LOOKUP_TABLE default
1 1 1
SCALARS Cfx float
LOOKUP_TABLE default
0 0 0
SCALARS Cfy float 1
LOOKUP_TABLE default
0 0 0
SCALARS Mach float 1
LOOKUP_TABLE default
0.3 0.3 0.3
SCALARS Cfz float 1
LOOKUP_TABLE default
0 0 0
";

    #[test]
    fn triangle_fixture() {
        let (cloud, f) = parse_vtk_surface(TRIANGLE, &VtkOptions::default()).unwrap();
        assert_eq!(cloud.len(), 3);
        for a in &cloud.areas {
            assert!((a - 0.5 / 3.0).abs() < 1e-15);
        }
        assert_eq!(f.cp, vec![1.0; 3]);
        assert_eq!(f.cfz, vec![0.0; 3]);
    }

    #[test]
    fn mismatched_array_length() {
        let bad = TRIANGLE.replace("0.3 0.3 0.3", "0.3 0.3");
        assert!(matches!(parse_vtk_surface(&bad, &VtkOptions::default()), Err(Error::Format(_))));
    }

    #[test]
    fn missing_array_is_named() {
        let bad = TRIANGLE.replace("SCALARS Cfy", "SCALARS Other");
        let err = parse_vtk_surface(&bad, &VtkOptions::default()).unwrap_err();
        assert!(matches!(&err, Error::Format(m) if m.contains("Cfy")), "{err}");
        let lenient = VtkOptions {
            lenient: true,
            ..Default::default()
        };
        let (_, f) = parse_vtk_surface(&bad, &lenient).unwrap();
        assert_eq!(f.cfy, vec![0.0; 3]);
    }

    #[test]
    fn renamed_arrays() {
        let text = TRIANGLE.replace("SCALARS Cp ", "SCALARS pressure ");
        let opts = VtkOptions {
            names: VtkArrayNames {
                cp: "pressure".into(),
                ..Default::default()
            },
            lenient: false,
        };
        assert!(parse_vtk_surface(&text, &opts).is_ok());
    }

    #[test]
    fn malformed_header_reports_line() {
        let bad = TRIANGLE.replace("DATASET POLYDATA", "DATASET UNSTRUCTURED_GRID");
        assert!(matches!(
            parse_vtk_surface(&bad, &VtkOptions::default()),
            Err(Error::Parse { line: 4, .. })
        ));
        let bad = TRIANGLE.replace("POLYGONS 1 4", "POLYGONS one 4");
        assert!(matches!(
            parse_vtk_surface(&bad, &VtkOptions::default()),
            Err(Error::Parse { line: 9, .. })
        ));
    }

    #[test]
    fn inward_polygons_are_flipped() {
        // Tetrahedron with every face wound inward.
        let text = "# vtk DataFile Version 3.0
tet
ASCII
DATASET POLYDATA
POINTS 4 double
0 0 0
1 0 0
0 1 0
0 0 1
POLYGONS 4 16
3 0 1 2
3 0 3 1
3 0 2 3
3 1 3 2
POINT_DATA 4
SCALARS Cp double 1
LOOKUP_TABLE default
0 0 0 0
SCALARS Cfx double 1
LOOKUP_TABLE default
0 0 0 0
SCALARS Cfy double 1
LOOKUP_TABLE default
0 0 0 0
SCALARS Cfz double 1
LOOKUP_TABLE default
0 0 0 0
";
        let (cloud, _) = parse_vtk_surface(text, &VtkOptions::default()).unwrap();
        // Vertex 3 sits on top; its normal must lean upward and away from the body.
        assert!(cloud.normals[3][2] > 0.0);
        assert!(cloud.normals[0].iter().all(|c| *c < 0.0));
    }

    #[test]
    fn writer_round_trip() {
        let (cloud, f) = parse_vtk_surface(TRIANGLE, &VtkOptions::default()).unwrap();
        let text = format_vtk_surface(&cloud, &f, &VtkArrayNames::default(), &[]).unwrap();
        let (c2, f2) = parse_vtk_surface(&text, &VtkOptions::default()).unwrap();
        assert_eq!(c2.points, cloud.points);
        assert_eq!(c2.faces, cloud.faces);
        assert_eq!(f2, f);
    }
}
