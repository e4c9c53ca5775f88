//! Constraint layers used by the realism metrics: an implausible domain, accessible
//! infrastructure, and a road graph, all in the dataset's projected coordinates.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use geo::{
    Distance, Euclidean, Geometry, Intersects, Length, LineString, MapCoords, Point, Polygon,
};
use geojson::{Feature, FeatureCollection, GeoJson, JsonObject, JsonValue};
use petgraph::graph::{NodeIndex, UnGraph};

use crate::error::{Error, Result};
use crate::mobility::{Crs, GeoPoint};

/// GPS tolerance radius around accessible infrastructure, in meters.
pub const DEFAULT_DELTA_M: f64 = 30.0;

pub const IMPLAUSIBLE_FILE: &str = "implausible.geojson";
pub const INFRASTRUCTURE_FILE: &str = "infrastructure.geojson";
pub const ROADS_FILE: &str = "roads.geojson";

#[derive(Clone, Debug)]
pub struct RoadEdge {
    pub u: NodeIndex,
    pub v: NodeIndex,
    pub geometry: LineString,
    pub length_m: f64,
}

/// Undirected road network. Graph edge weights index into [`RoadGraph::edges`].
#[derive(Clone, Debug, Default)]
pub struct RoadGraph {
    graph: UnGraph<String, usize>,
    edges: Vec<RoadEdge>,
}

impl RoadGraph {
    /// Builds the graph from `(u, v, geometry)` triples; node ids are free-form labels.
    pub fn new(edges: impl IntoIterator<Item = (String, String, LineString)>) -> Result<Self> {
        let mut g = RoadGraph::default();
        let mut ids: HashMap<String, NodeIndex> = HashMap::new();
        for (u, v, geometry) in edges {
            let length_m = Euclidean.length(&geometry);
            if !(length_m > 0.0 && length_m.is_finite()) {
                return Err(Error::GeoJson(format!(
                    "road edge {u}-{v} has non-positive length"
                )));
            }
            let mut node = |id: String| {
                *ids.entry(id.clone())
                    .or_insert_with(|| g.graph.add_node(id))
            };
            let (u, v) = (node(u), node(v));
            g.graph.add_edge(u, v, g.edges.len());
            g.edges.push(RoadEdge {
                u,
                v,
                geometry,
                length_m,
            });
        }
        Ok(g)
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn graph(&self) -> &UnGraph<String, usize> {
        &self.graph
    }

    pub fn node_label(&self, n: NodeIndex) -> &str {
        &self.graph[n]
    }

    /// Index of the edge closest to `p` (first one on ties).
    pub fn nearest_edge(&self, p: &Point) -> Option<usize> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (i, e) in self.edges.iter().enumerate() {
            let d = Euclidean.distance(p, &e.geometry);
            if d < best_d {
                best_d = d;
                best = Some(i);
            }
        }
        best
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConstraintLayers {
    /// Water bodies, restricted areas and similar.
    pub implausible: Vec<Polygon>,
    /// Buildings, roads, bridges, piers.
    pub accessible: Vec<Geometry>,
    pub roads: RoadGraph,
}

impl ConstraintLayers {
    pub fn new(implausible: Vec<Polygon>, accessible: Vec<Geometry>, roads: RoadGraph) -> Self {
        Self {
            implausible,
            accessible,
            roads,
        }
    }

    pub fn in_implausible_domain(&self, p: &GeoPoint) -> bool {
        let pt = Point::new(p.x, p.y);
        self.implausible.iter().any(|poly| poly.intersects(&pt))
    }

    /// Distance to the nearest accessible geometry; infinite when there is none.
    pub fn distance_to_accessible(&self, p: &GeoPoint) -> f64 {
        let pt = Point::new(p.x, p.y);
        self.accessible
            .iter()
            .map(|g| Euclidean.distance(&pt, g))
            .fold(f64::INFINITY, f64::min)
    }

    /// Reads `implausible.geojson`, `infrastructure.geojson` and, if present,
    /// `roads.geojson` from `dir`.
    ///
    /// A collection whose foreign member `"projected"` is `true` is taken as-is;
    /// otherwise positions are `[lon, lat]` and are projected with `crs`.
    pub fn load_dir(dir: &Path, crs: &Crs) -> Result<Self> {
        let implausible = read_collection(&dir.join(IMPLAUSIBLE_FILE), crs)?
            .into_iter()
            .map(|(g, _)| polygons(g))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let accessible = read_collection(&dir.join(INFRASTRUCTURE_FILE), crs)?
            .into_iter()
            .map(|(g, _)| g)
            .collect();
        let roads_path = dir.join(ROADS_FILE);
        let roads = if roads_path.exists() {
            let mut edges = Vec::new();
            for (g, props) in read_collection(&roads_path, crs)? {
                let ls = match g {
                    Geometry::LineString(ls) => ls,
                    _ => return Err(Error::GeoJson("road features must be LineStrings".into())),
                };
                edges.push((node_id(&props, "u")?, node_id(&props, "v")?, ls));
            }
            RoadGraph::new(edges)?
        } else {
            RoadGraph::default()
        };
        Ok(Self::new(implausible, accessible, roads))
    }

    /// Writes the three files in projected form, readable by [`ConstraintLayers::load_dir`].
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let polys = self
            .implausible
            .iter()
            .map(|p| Feature::from(geojson::GeometryValue::from(p)));
        write_collection(&dir.join(IMPLAUSIBLE_FILE), polys)?;
        let access = self
            .accessible
            .iter()
            .map(|g| Feature::from(geojson::GeometryValue::from(g)));
        write_collection(&dir.join(INFRASTRUCTURE_FILE), access)?;
        let roads = self.roads.edges.iter().map(|e| {
            let mut f = Feature::from(geojson::GeometryValue::from(&e.geometry));
            let mut props = JsonObject::new();
            props.insert("u".into(), self.roads.graph[e.u].clone().into());
            props.insert("v".into(), self.roads.graph[e.v].clone().into());
            f.properties = Some(props);
            f
        });
        write_collection(&dir.join(ROADS_FILE), roads)
    }
}

fn polygons(g: Geometry) -> Result<Vec<Polygon>> {
    match g {
        Geometry::Polygon(p) => Ok(vec![p]),
        Geometry::MultiPolygon(mp) => Ok(mp.0),
        other => Err(Error::GeoJson(format!(
            "implausible domain must contain polygons, found {other:?}"
        ))),
    }
}

fn node_id(props: &Option<JsonObject>, key: &str) -> Result<String> {
    match props.as_ref().and_then(|p| p.get(key)) {
        Some(JsonValue::String(s)) => Ok(s.clone()),
        Some(JsonValue::Number(n)) => Ok(n.to_string()),
        _ => Err(Error::GeoJson(format!(
            "road feature lacks node id `{key}`"
        ))),
    }
}

fn read_collection(path: &Path, crs: &Crs) -> Result<Vec<(Geometry, Option<JsonObject>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fc = match text.parse::<GeoJson>() {
        Ok(GeoJson::FeatureCollection(fc)) => fc,
        Ok(_) => {
            return Err(Error::GeoJson(format!(
                "{}: expected a FeatureCollection",
                path.display()
            )))
        }
        Err(e) => return Err(Error::GeoJson(format!("{}: {e}", path.display()))),
    };
    let projected = fc
        .foreign_members
        .as_ref()
        .and_then(|m| m.get("projected"))
        .and_then(JsonValue::as_bool)
        .unwrap_or(false);
    let proj = match (projected, crs.projection()) {
        (true, _) => None,
        (false, Some(p)) => Some(*p),
        (false, None) => {
            return Err(Error::GeoJson(format!(
                "{}: geographic layer but the dataset has no projection",
                path.display()
            )))
        }
    };
    let mut out = Vec::with_capacity(fc.features.len());
    for f in fc.features {
        let Some(geom) = f.geometry else { continue };
        let g: Geometry = Geometry::try_from(geom)
            .map_err(|e| Error::GeoJson(format!("{}: {e}", path.display())))?;
        let g = match proj {
            Some(p) => g.map_coords(|c| {
                let (x, y) = p.forward(c.y, c.x);
                geo::coord! { x: x, y: y }
            }),
            None => g,
        };
        out.push((g, f.properties));
    }
    Ok(out)
}

fn write_collection(path: &Path, features: impl Iterator<Item = Feature>) -> Result<()> {
    let mut fc = FeatureCollection::new(features);
    let mut members = JsonObject::new();
    members.insert("projected".into(), JsonValue::Bool(true));
    fc.foreign_members = Some(members);
    let text = serde_json::to_string_pretty(&GeoJson::FeatureCollection(fc))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
