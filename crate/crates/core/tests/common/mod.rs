#![allow(dead_code)]

use edurec::datagen::GeneratorConfig;
use edurec::graph::{CourseAttrs, StudentAttrs};
use edurec::{EdgeKind, HeteroGraph, NodeAttrs, NodeKind, NodeRecord};

pub fn student(id: &str) -> NodeRecord {
    NodeRecord::new(
        id,
        NodeAttrs::Student(StudentAttrs {
            name: id.into(),
            id: id.into(),
            learning_time: 12.0,
            likes: 3,
            ..Default::default()
        }),
    )
}

pub fn course(id: &str) -> NodeRecord {
    NodeRecord::new(
        id,
        NodeAttrs::Course(CourseAttrs {
            name: id.into(),
            id: id.into(),
            ..Default::default()
        }),
    )
}

/// One student per entry of `loads`, enrolled in that many of `n_courses`
/// courses.
pub fn enrolment_graph(loads: &[usize], n_courses: usize) -> HeteroGraph {
    let mut g = HeteroGraph::new();
    for c in 0..n_courses {
        g.add_node(course(&format!("course:{c}"))).unwrap();
    }
    for (s, &n) in loads.iter().enumerate() {
        let id = format!("student:{s}");
        g.add_node(student(&id)).unwrap();
        for c in 0..n {
            g.add_edge(EdgeKind::Learn, &id, &format!("course:{c}")).unwrap();
        }
    }
    g
}

pub fn named(kind: NodeKind, id: &str) -> NodeRecord {
    NodeRecord::new(id, NodeAttrs::named(kind, id).expect("attribute-free kind"))
}

/// Default generator shape with every count scaled to `n_students`.
pub fn scaled_config(n_students: usize, coupling: f64, seed: u64) -> GeneratorConfig {
    let d = GeneratorConfig::default();
    let scale = |x: usize| (x * n_students).div_ceil(d.n_students);
    GeneratorConfig {
        n_students,
        n_courses: scale(d.n_courses),
        n_teachers: scale(d.n_teachers),
        n_schools: scale(d.n_schools),
        n_majors: scale(d.n_majors),
        engagement_coupling: coupling,
        seed,
        ..d
    }
}
