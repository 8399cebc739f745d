//! Image-method multipath search.
//!
//! For every ordered sequence of up to `R` reflecting faces (no face repeated
//! back to back) the source is mirrored face by face. A sequence yields a path
//! when back-projecting from the receiver through the images lands every
//! specular point inside its face. Each leg is then checked for obstructions;
//! crossings count as transmissions and the path is kept while the total does
//! not exceed `T`.

use serde::Serialize;

use crate::geometry::{mirror_point, segment_hits, Vec3, WallFace, GRAZING_COSINE};
use crate::scenario::{AccessPoint, RtSettings, Scenario};

const SEGMENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Reflection,
    Transmission,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub face: usize,
    pub point: Vec3,
    pub incidence_cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayPath {
    pub source: String,
    /// Interactions in propagation order.
    pub interactions: Vec<Interaction>,
    /// Source, specular points, receiver.
    pub vertices: Vec<Vec3>,
    pub terminus: Vec3,
    pub total_length: f64,
    pub departure_direction: Vec3,
}

impl RayPath {
    /// Reflecting faces in order; also the path's identity.
    pub fn face_sequence(&self) -> Vec<usize> {
        self.interactions
            .iter()
            .filter(|i| i.kind == InteractionKind::Reflection)
            .map(|i| i.face)
            .collect()
    }

    pub fn reflections(&self) -> usize {
        self.face_sequence().len()
    }

    pub fn transmissions(&self) -> usize {
        self.interactions
            .iter()
            .filter(|i| i.kind == InteractionKind::Transmission)
            .count()
    }
}

#[derive(Debug, Clone)]
struct ImageNode {
    face: usize,
    parent: Option<usize>,
    image: Vec3,
}

/// Images of one source for every admissible face sequence, breadth first
/// so that paths come out ordered by reflection count, then face indices.
#[derive(Debug, Clone)]
pub struct ImageTree {
    source_id: String,
    source: Vec3,
    nodes: Vec<ImageNode>,
}

impl ImageTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn chain(&self, mut idx: usize, out: &mut Vec<usize>) {
        out.clear();
        loop {
            out.push(idx);
            match self.nodes[idx].parent {
                Some(p) => idx = p,
                None => break,
            }
        }
        out.reverse();
    }
}

/// Reusable tracer over a scenario's wall faces.
#[derive(Debug, Clone)]
pub struct Tracer {
    faces: Vec<WallFace>,
    settings: RtSettings,
}

impl Tracer {
    pub fn new(s: &Scenario) -> Self {
        Self::from_faces(s.faces(), s.rt)
    }

    pub fn from_faces(faces: Vec<WallFace>, settings: RtSettings) -> Self {
        Self { faces, settings }
    }

    pub fn faces(&self) -> &[WallFace] {
        &self.faces
    }

    pub fn settings(&self) -> &RtSettings {
        &self.settings
    }

    pub fn image_tree(&self, ap: &AccessPoint) -> ImageTree {
        let mut nodes: Vec<ImageNode> = Vec::new();
        let mut level: Vec<usize> = Vec::new();
        for f in &self.faces {
            if f.signed_distance(ap.position) == 0.0 {
                continue;
            }
            level.push(nodes.len());
            nodes.push(ImageNode {
                face: f.index,
                parent: None,
                image: mirror_point(ap.position, f),
            });
        }
        for _ in 1..self.settings.max_reflections {
            let mut next = Vec::new();
            for &p in &level {
                let (pface, pimage) = (nodes[p].face, nodes[p].image);
                for f in &self.faces {
                    if f.index == pface || f.signed_distance(pimage) == 0.0 {
                        continue;
                    }
                    next.push(nodes.len());
                    nodes.push(ImageNode {
                        face: f.index,
                        parent: Some(p),
                        image: mirror_point(pimage, f),
                    });
                }
            }
            level = next;
        }
        if self.settings.max_reflections == 0 {
            nodes.clear();
        }
        ImageTree {
            source_id: ap.id.clone(),
            source: ap.position,
            nodes,
        }
    }

    /// All valid paths from the tree's source to `rx`: the direct path first,
    /// then reflected paths by increasing order.
    pub fn trace(&self, tree: &ImageTree, rx: Vec3) -> Vec<RayPath> {
        let mut paths = Vec::new();
        if let Some(p) = self.build_path(tree, &[], rx) {
            paths.push(p);
        }
        let mut chain = Vec::new();
        let mut specular = Vec::new();
        for idx in 0..tree.nodes.len() {
            tree.chain(idx, &mut chain);
            if self.specular_points(tree, &chain, rx, &mut specular) {
                let faces: Vec<(usize, Vec3)> = chain
                    .iter()
                    .zip(&specular)
                    .map(|(&n, &p)| (tree.nodes[n].face, p))
                    .collect();
                if let Some(p) = self.build_path(tree, &faces, rx) {
                    paths.push(p);
                }
            }
        }
        paths
    }

    /// Back-projects from `rx` through the chain's images; fills `out` with the
    /// specular points in propagation order.
    fn specular_points(
        &self,
        tree: &ImageTree,
        chain: &[usize],
        rx: Vec3,
        out: &mut Vec<Vec3>,
    ) -> bool {
        out.clear();
        let mut target = rx;
        for &n in chain.iter().rev() {
            let node = &tree.nodes[n];
            let face = &self.faces[node.face];
            let d = target - node.image;
            let len = d.norm();
            if len == 0.0 {
                return false;
            }
            let nrm = face.normal();
            if (d.dot(nrm) / len).abs() < GRAZING_COSINE {
                return false;
            }
            let t = (face.origin - node.image).dot(nrm) / d.dot(nrm);
            if t <= SEGMENT_EPS || t >= 1.0 - SEGMENT_EPS {
                return false;
            }
            let p = node.image + d * t;
            if !face.contains_projection(p) {
                return false;
            }
            out.push(p);
            target = p;
        }
        out.reverse();
        true
    }

    fn build_path(
        &self,
        tree: &ImageTree,
        specular: &[(usize, Vec3)],
        rx: Vec3,
    ) -> Option<RayPath> {
        let mut vertices = Vec::with_capacity(specular.len() + 2);
        vertices.push(tree.source);
        vertices.extend(specular.iter().map(|&(_, p)| p));
        vertices.push(rx);

        let mut interactions = Vec::new();
        let mut transmissions = 0;
        let mut total_length = 0.0;
        for (leg, w) in vertices.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let len = a.distance(b);
            if len == 0.0 {
                return None;
            }
            total_length += len;
            let hits = segment_hits(a, b, &self.faces);
            transmissions += hits.len();
            if transmissions > self.settings.max_transmissions {
                return None;
            }
            interactions.extend(hits.into_iter().map(|h| Interaction {
                kind: InteractionKind::Transmission,
                face: h.face,
                point: h.point,
                incidence_cosine: h.incidence_cosine,
            }));
            if let Some(&(face, point)) = specular.get(leg) {
                let nrm = self.faces[face].normal();
                interactions.push(Interaction {
                    kind: InteractionKind::Reflection,
                    face,
                    point,
                    incidence_cosine: ((b - a).dot(nrm) / len).abs(),
                });
            }
        }
        Some(RayPath {
            source: tree.source_id.clone(),
            interactions,
            departure_direction: (vertices[1] - vertices[0]).normalized(),
            vertices,
            terminus: rx,
            total_length,
        })
    }
}

/// Every valid path from `ap` to `rx` under the scenario's settings.
pub fn trace_paths(s: &Scenario, ap: &AccessPoint, rx: Vec3) -> Vec<RayPath> {
    let tracer = Tracer::new(s);
    let tree = tracer.image_tree(ap);
    tracer.trace(&tree, rx)
}
