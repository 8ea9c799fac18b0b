use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geom::{BBox, Geometry, GeometryKind, Point, Polygon, Polyline, Ring};

use super::table::format_float;

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Null,
    Number(f64),
    Text(String),
}

impl AttrValue {
    /// Text cells become numbers only when no information is lost; codes
    /// with leading zeros such as "037001" stay text.
    pub fn parse(s: &str) -> AttrValue {
        if s.is_empty() {
            return AttrValue::Null;
        }
        let digits = s.trim_start_matches('-');
        let leading_zero = digits.len() > 1 && digits.starts_with('0') && !digits.starts_with("0.");
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && !leading_zero && !s.starts_with('+') && s.trim() == s => AttrValue::Number(v),
            _ => AttrValue::Text(s.to_string()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, AttrValue::Null)
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Null => Ok(()),
            AttrValue::Number(v) => f.write_str(&format_float(*v)),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub id: String,
    pub geometry: Geometry,
    /// Aligned with [`FeatureSet::columns`].
    pub attributes: Vec<AttrValue>,
}

/// Ordered, uniquely identified features of a single geometry kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSet {
    columns: Vec<String>,
    features: Vec<Feature>,
    index: HashMap<String, usize>,
}

impl FeatureSet {
    pub fn new(columns: Vec<String>, features: Vec<Feature>) -> Result<Self> {
        let mut index = HashMap::with_capacity(features.len());
        let mut kind = None;
        for (i, f) in features.iter().enumerate() {
            if f.id.is_empty() {
                return Err(Error::InvalidInput(format!("feature {i} has an empty id")));
            }
            if index.insert(f.id.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate feature id {:?}", f.id)));
            }
            if f.attributes.len() != columns.len() {
                return Err(Error::InvalidInput(format!(
                    "feature {:?} has {} attributes for {} columns",
                    f.id,
                    f.attributes.len(),
                    columns.len()
                )));
            }
            let k = f.geometry.kind();
            match kind {
                None => kind = Some(k),
                Some(prev) if prev != k => {
                    return Err(Error::InvalidInput(format!("mixed geometry kinds: {prev} and {k}")));
                }
                _ => {}
            }
        }
        Ok(FeatureSet {
            columns,
            features,
            index,
        })
    }

    /// Point features without attributes.
    pub fn from_points(points: impl IntoIterator<Item = (String, Point)>) -> Result<Self> {
        let features = points
            .into_iter()
            .map(|(id, p)| Feature {
                id,
                geometry: Geometry::Point(p),
                attributes: Vec::new(),
            })
            .collect();
        FeatureSet::new(Vec::new(), features)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, i: usize) -> &Feature {
        &self.features[i]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `None` for an empty set.
    pub fn kind(&self) -> Option<GeometryKind> {
        self.features.first().map(|f| f.geometry.kind())
    }

    pub fn bbox(&self) -> Option<BBox> {
        let mut it = self.features.iter().map(|f| f.geometry.bbox());
        let first = it.next()?;
        Some(it.fold(first, |acc, b| acc.union(&b)))
    }

    /// Point coordinates, or an invalid-input error for other geometry kinds.
    pub fn points(&self) -> Result<Vec<Point>> {
        self.features
            .iter()
            .map(|f| match f.geometry {
                Geometry::Point(p) => Ok(p),
                _ => Err(Error::InvalidInput(format!(
                    "expected point features, found {}",
                    f.geometry.kind()
                ))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    GeoJson,
}

impl FeatureFormat {
    /// Guess from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(FeatureFormat::Csv),
            "geojson" | "json" => Some(FeatureFormat::GeoJson),
            _ => None,
        }
    }
}

impl FromStr for FeatureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FeatureFormat::Csv),
            "geojson" => Ok(FeatureFormat::GeoJson),
            other => Err(Error::InvalidParameter(format!("unknown feature format {other:?}"))),
        }
    }
}

pub fn load_features(
    path: impl AsRef<Path>,
    format: FeatureFormat,
    id_column: &str,
    x_column: &str,
    y_column: &str,
) -> Result<FeatureSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = match format {
        FeatureFormat::Csv => parse_csv_features(&text, id_column, x_column, y_column),
        FeatureFormat::GeoJson => parse_geojson_features(&text, id_column),
    };
    parsed.map_err(|e| match e {
        Error::Load { line, message, .. } => Error::load(path, line, message),
        other => other,
    })
}

fn load_err(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::load("<input>", line, message)
}

/// Point table: one row per feature, coordinates in `x_column`/`y_column`,
/// every other column kept as an attribute.
pub fn parse_csv_features(text: &str, id_column: &str, x_column: &str, y_column: &str) -> Result<FeatureSet> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| load_err(Some(1), e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| load_err(Some(1), format!("missing column {name:?}")))
    };
    let (id_at, x_at, y_at) = (find(id_column)?, find(x_column)?, find(y_column)?);
    let attr_cols: Vec<usize> = (0..headers.len())
        .filter(|i| ![id_at, x_at, y_at].contains(i))
        .collect();
    let columns = attr_cols.iter().map(|&i| headers[i].to_string()).collect();

    let mut features = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| load_err(e.position().map(|p| p.line() as usize), e.to_string()))?;
        let line = record.position().map(|p| p.line() as usize);
        let id = record[id_at].to_string();
        if id.is_empty() {
            return Err(load_err(line, "empty feature id"));
        }
        if let Some(first) = seen.insert(id.clone(), line.unwrap_or(0)) {
            return Err(load_err(
                line,
                format!("duplicate id {id:?} (first seen on line {first})"),
            ));
        }
        let coord = |at: usize, name: &str| -> Result<f64> {
            record[at]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| load_err(line, format!("bad {name} coordinate {:?}", &record[at])))
        };
        let p = Point::new(coord(x_at, x_column)?, coord(y_at, y_column)?);
        let attributes = attr_cols.iter().map(|&i| AttrValue::parse(&record[i])).collect();
        features.push(Feature {
            id,
            geometry: Geometry::Point(p),
            attributes,
        });
    }
    FeatureSet::new(columns, features).map_err(|e| load_err(None, e.to_string()))
}

/// FeatureCollection with Point, LineString and Polygon members. The id
/// comes from `properties[id_column]`.
pub fn parse_geojson_features(text: &str, id_column: &str) -> Result<FeatureSet> {
    let doc: Value = serde_json::from_str(text).map_err(|e| load_err(Some(e.line()), e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(load_err(None, "expected a GeoJSON FeatureCollection"));
    }
    let items = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| load_err(None, "FeatureCollection has no features array"))?;

    let mut columns: Vec<String> = Vec::new();
    let mut raw = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let at = |msg: String| load_err(None, format!("features[{i}]: {msg}"));
        let props = match item.get("properties") {
            Some(Value::Object(m)) => m.clone(),
            None | Some(Value::Null) => Map::new(),
            Some(_) => return Err(at("properties must be an object".into())),
        };
        let id = match props.get(id_column) {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(at(format!("missing id property {id_column:?}"))),
        };
        let geometry = item
            .get("geometry")
            .ok_or_else(|| at("missing geometry".into()))
            .and_then(|g| parse_geometry(g).map_err(|e| at(e.to_string())))?;
        for key in props.keys() {
            if key != id_column && !columns.contains(key) {
                columns.push(key.clone());
            }
        }
        raw.push((id, geometry, props));
    }

    let mut seen = HashMap::new();
    let mut features = Vec::with_capacity(raw.len());
    for (i, (id, geometry, props)) in raw.into_iter().enumerate() {
        if seen.insert(id.clone(), i).is_some() {
            return Err(load_err(None, format!("features[{i}]: duplicate id {id:?}")));
        }
        let attributes = columns
            .iter()
            .map(|c| match props.get(c) {
                None | Some(Value::Null) => AttrValue::Null,
                Some(Value::Number(n)) => n.as_f64().map_or(AttrValue::Null, AttrValue::Number),
                Some(Value::String(s)) => AttrValue::Text(s.clone()),
                Some(other) => AttrValue::Text(other.to_string()),
            })
            .collect();
        features.push(Feature {
            id,
            geometry,
            attributes,
        });
    }
    FeatureSet::new(columns, features).map_err(|e| load_err(None, e.to_string()))
}

fn parse_position(v: &Value) -> Result<Point> {
    let arr = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| Error::InvalidInput("position must be [x, y]".into()))?;
    match (arr[0].as_f64(), arr[1].as_f64()) {
        (Some(x), Some(y)) => Ok(Point::new(x, y)),
        _ => Err(Error::InvalidInput("non-numeric coordinate".into())),
    }
}

fn parse_positions(v: &Value) -> Result<Vec<Point>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidInput("expected a coordinate array".into()))?
        .iter()
        .map(parse_position)
        .collect()
}

fn parse_geometry(g: &Value) -> Result<Geometry> {
    let kind = g.get("type").and_then(Value::as_str).unwrap_or("");
    let coords = g.get("coordinates");
    let coords = || coords.ok_or_else(|| Error::InvalidInput(format!("{kind} without coordinates")));
    match kind {
        "Point" => Ok(Geometry::Point(parse_position(coords()?)?)),
        "LineString" => Ok(Geometry::Polyline(Polyline::new(parse_positions(coords()?)?)?)),
        "Polygon" => {
            let rings = coords()?
                .as_array()
                .filter(|r| !r.is_empty())
                .ok_or_else(|| Error::InvalidInput("polygon needs at least one ring".into()))?;
            let mut rings = rings.iter().map(|r| parse_positions(r).and_then(Ring::new));
            let outer = rings.next().expect("non-empty")?;
            let holes = rings.collect::<Result<Vec<_>>>()?;
            Ok(Geometry::Polygon(Polygon::new(outer, holes)?))
        }
        other => Err(Error::UnsupportedGeometry(format!(
            "geometry type {other:?} (supported: Point, LineString, Polygon)"
        ))),
    }
}

/// Writes point features as `id,x,y,<attributes…>`.
pub fn save_features_csv(fs: &FeatureSet, path: impl AsRef<Path>, id_column: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![id_column.to_string(), "x".into(), "y".into()];
    header.extend(fs.columns.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for f in &fs.features {
        let Geometry::Point(p) = f.geometry else {
            return Err(Error::InvalidInput("CSV output holds point features only".into()));
        };
        let mut rec = vec![f.id.clone(), format_float(p.x), format_float(p.y)];
        rec.extend(f.attributes.iter().map(|a| a.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn position_json(p: &Point) -> Value {
    json!([p.x, p.y])
}

fn ring_json(r: &Ring) -> Value {
    let mut v: Vec<Value> = r.vertices().iter().map(position_json).collect();
    v.push(position_json(&r.vertices()[0]));
    Value::Array(v)
}

pub fn save_features_geojson(fs: &FeatureSet, path: impl AsRef<Path>, id_column: &str) -> Result<()> {
    let path = path.as_ref();
    let features: Vec<Value> = fs
        .features
        .iter()
        .map(|f| {
            let geometry = match &f.geometry {
                Geometry::Point(p) => json!({"type": "Point", "coordinates": position_json(p)}),
                Geometry::Polyline(l) => json!({
                    "type": "LineString",
                    "coordinates": l.vertices().iter().map(position_json).collect::<Vec<_>>(),
                }),
                Geometry::Polygon(poly) => json!({
                    "type": "Polygon",
                    "coordinates": poly.rings().map(ring_json).collect::<Vec<_>>(),
                }),
            };
            let mut props = Map::new();
            props.insert(id_column.to_string(), Value::String(f.id.clone()));
            for (c, a) in fs.columns.iter().zip(&f.attributes) {
                let v = match a {
                    AttrValue::Null => Value::Null,
                    AttrValue::Number(n) => json!(n),
                    AttrValue::Text(s) => Value::String(s.clone()),
                };
                props.insert(c.clone(), v);
            }
            json!({"type": "Feature", "properties": props, "geometry": geometry})
        })
        .collect();
    let doc = json!({"type": "FeatureCollection", "features": features});
    let text = serde_json::to_string(&doc).expect("JSON values always serialize");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
