//! JSON mesh format: `{ "vertices": [[x, y], …], "cells": [[i0, i1, …], …] }`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_topology, PolygonalMesh};
use crate::{Result, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
}

impl MeshFile {
    pub fn from_mesh(mesh: &PolygonalMesh) -> Self {
        MeshFile {
            vertices: mesh.vertices().iter().map(|v| [v.x, v.y]).collect(),
            cells: mesh.cells().to_vec(),
        }
    }

    pub fn into_mesh(self) -> Result<PolygonalMesh> {
        let vertices = self.vertices.into_iter().map(|[x, y]| Vec2::new(x, y)).collect();
        build_topology(vertices, self.cells)
    }
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh> {
    let text = fs::read_to_string(path)?;
    let file: MeshFile = serde_json::from_str(&text)?;
    file.into_mesh()
}

pub fn write_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string(&MeshFile::from_mesh(mesh))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
