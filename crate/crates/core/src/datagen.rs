//! Seeded synthetic MOOC datasets.
//!
//! Each student draws a latent concentration `λ ∈ [0, 1]` and a favourite
//! (category, school, teacher). Every enrolment slot is filled from the
//! favourite category (biased toward the favourite school and teacher) with
//! probability `λ`, otherwise uniformly from the whole catalogue. `λ` has mean
//! `preference_strength`; at 1.0 every student enrols only in the favourite
//! category, at 0.0 choice is uniform.
//!
//! Engagement is log-normal per-course hours and likes, shifted in log space
//! by `coupling × z`, where `z` is the z-score of the student's realised
//! category top share.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    CourseAttrs, EdgeKind, HeteroGraph, NodeAttrs, NodeKind, NodeRecord, StudentAttrs, TeacherAttrs,
};

/// Career labels, in the order used by per-career settings.
pub const CAREERS: [&str; 3] = ["student", "professional", "other"];

const TEACHER_TITLES: [&str; 4] = ["Professor", "Associate Professor", "Lecturer", "Assistant Professor"];
const SECOND_TEACHER_PROB: f64 = 0.25;
const FAVORITE_SCHOOL_BOOST: f64 = 4.0;
const FAVORITE_TEACHER_BOOST: f64 = 4.0;
const HOURS_LOG_MEAN: f64 = 0.7; // ~2 h per course
const HOURS_LOG_SD: f64 = 0.5;
const LIKES_LOG_MEAN: f64 = 1.6;
const LIKES_LOG_SD: f64 = 0.8;
const RESPONSE_LOG_MEAN: f64 = 1.1;
const RESPONSE_LOG_SD: f64 = 0.7;

#[derive(Debug, Error, PartialEq)]
#[error("invalid generator config: {0}")]
pub struct InvalidConfig(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_students: usize,
    pub n_courses: usize,
    pub n_teachers: usize,
    pub n_schools: usize,
    pub n_categories: usize,
    pub n_majors: usize,
    /// Inclusive range of Learn edges per student.
    pub courses_per_student: (usize, usize),
    pub preference_strength: f64,
    pub engagement_coupling: f64,
    /// Per-career coupling overriding `engagement_coupling`, indexed like [`CAREERS`].
    pub cohort_coupling: Option<[f64; 3]>,
    /// Relative frequency of each career, indexed like [`CAREERS`].
    pub career_weights: [f64; 3],
    pub seed: u64,
}

impl Default for GeneratorConfig {
    /// Node counts of the reference MOOC crawl.
    fn default() -> Self {
        GeneratorConfig {
            n_students: 6363,
            n_courses: 24703,
            n_teachers: 39554,
            n_schools: 1196,
            n_categories: 32,
            n_majors: 360,
            courses_per_student: (20, 45),
            preference_strength: 0.5,
            engagement_coupling: 0.5,
            cohort_coupling: None,
            career_weights: [0.6, 0.3, 0.1],
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        let counts = [
            ("n_students", self.n_students),
            ("n_courses", self.n_courses),
            ("n_teachers", self.n_teachers),
            ("n_schools", self.n_schools),
            ("n_categories", self.n_categories),
            ("n_majors", self.n_majors),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        let (lo, hi) = self.courses_per_student;
        if lo == 0 || lo > hi {
            return Err(InvalidConfig(format!("courses_per_student ({lo}, {hi}) must satisfy 1 <= min <= max")));
        }
        if hi > self.n_courses {
            return Err(InvalidConfig(format!(
                "courses_per_student max {hi} exceeds n_courses {}",
                self.n_courses
            )));
        }
        if !(0.0..=1.0).contains(&self.preference_strength) {
            return Err(InvalidConfig(format!(
                "preference_strength {} outside [0, 1]",
                self.preference_strength
            )));
        }
        let couplings = std::iter::once(self.engagement_coupling).chain(self.cohort_coupling.into_iter().flatten());
        for c in couplings {
            if !(-1.0..=1.0).contains(&c) {
                return Err(InvalidConfig(format!("engagement coupling {c} outside [-1, 1]")));
            }
        }
        if self.career_weights.iter().any(|w| !w.is_finite() || *w < 0.0) || self.career_weights.iter().sum::<f64>() <= 0.0 {
            return Err(InvalidConfig("career_weights must be non-negative with a positive sum".into()));
        }
        Ok(())
    }

    fn coupling_for(&self, career: usize) -> f64 {
        self.cohort_coupling.map_or(self.engagement_coupling, |c| c[career])
    }
}

struct Course {
    category: usize,
    school: usize,
    teachers: Vec<usize>,
}

struct Student {
    career: usize,
    major: usize,
    school: usize,
    courses: Vec<usize>,
}

fn lambda(rng: &mut impl Rng, strength: f64) -> f64 {
    if strength <= 0.0 {
        0.0
    } else if strength >= 1.0 {
        1.0
    } else {
        // u^a with a = (1-s)/s has mean s.
        rng.random::<f64>().powf((1.0 - strength) / strength)
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Draws `k` distinct courses for one student.
fn enrol(
    rng: &mut impl Rng,
    k: usize,
    lambda: f64,
    n_courses: usize,
    pool: &[usize],
    pool_weights: &[f64],
) -> Vec<usize> {
    let mut taken = vec![false; n_courses];
    let mut remaining: Vec<f64> = pool_weights.to_vec();
    let mut picks = Vec::with_capacity(k);
    let mut pool_left = pool.len();
    let favorite = WeightedIndex::new(pool_weights).ok();

    while picks.len() < k {
        let concentrated = pool_left > 0 && rng.random::<f64>() < lambda;
        let course = if concentrated {
            let dist = favorite.as_ref().expect("non-empty pool");
            let mut pick = None;
            for _ in 0..64 {
                let i = dist.sample(rng);
                if remaining[i] > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            let i = pick.unwrap_or_else(|| {
                // Rejection stalled; sample the leftover mass directly.
                let total: f64 = remaining.iter().sum();
                let mut target = rng.random::<f64>() * total;
                let mut last = 0;
                for (i, w) in remaining.iter().enumerate() {
                    if *w > 0.0 {
                        last = i;
                        if target < *w {
                            return i;
                        }
                        target -= w;
                    }
                }
                last
            });
            remaining[i] = 0.0;
            pool_left -= 1;
            pool[i]
        } else {
            let mut c = rng.random_range(0..n_courses);
            while taken[c] {
                c = rng.random_range(0..n_courses);
            }
            if let Some(pos) = pool.iter().position(|&p| p == c) {
                if remaining[pos] > 0.0 {
                    remaining[pos] = 0.0;
                    pool_left -= 1;
                }
            }
            c
        };
        taken[course] = true;
        picks.push(course);
    }
    picks
}

/// Builds a frozen synthetic graph. The output is a pure function of `config`.
pub fn generate_synthetic(config: &GeneratorConfig) -> Result<HeteroGraph, InvalidConfig> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let teacher_school: Vec<usize> = (0..config.n_teachers)
        .map(|_| rng.random_range(0..config.n_schools))
        .collect();
    let teacher_title: Vec<usize> = (0..config.n_teachers)
        .map(|_| rng.random_range(0..TEACHER_TITLES.len()))
        .collect();

    let mut courses = Vec::with_capacity(config.n_courses);
    let mut by_category: Vec<Vec<usize>> = vec![Vec::new(); config.n_categories];
    for c in 0..config.n_courses {
        let category = rng.random_range(0..config.n_categories);
        let school = rng.random_range(0..config.n_schools);
        let mut teachers = vec![rng.random_range(0..config.n_teachers)];
        if config.n_teachers > 1 && rng.random::<f64>() < SECOND_TEACHER_PROB {
            let mut t = rng.random_range(0..config.n_teachers);
            while t == teachers[0] {
                t = rng.random_range(0..config.n_teachers);
            }
            teachers.push(t);
        }
        by_category[category].push(c);
        courses.push(Course { category, school, teachers });
    }

    let career_dist = WeightedIndex::new(config.career_weights).expect("validated weights");
    let (lo, hi) = config.courses_per_student;
    let mut students = Vec::with_capacity(config.n_students);
    for _ in 0..config.n_students {
        let career = career_dist.sample(&mut rng);
        let major = rng.random_range(0..config.n_majors);
        let school = rng.random_range(0..config.n_schools);
        let k = rng.random_range(lo..=hi);
        let lam = lambda(&mut rng, config.preference_strength);

        let roomy: Vec<usize> = (0..config.n_categories).filter(|&c| by_category[c].len() >= k).collect();
        let fav_category = if roomy.is_empty() {
            (0..config.n_categories)
                .max_by_key(|&c| (by_category[c].len(), std::cmp::Reverse(c)))
                .expect("at least one category")
        } else {
            roomy[rng.random_range(0..roomy.len())]
        };
        let pool = &by_category[fav_category];
        let (fav_school, fav_teacher) = if pool.is_empty() {
            (usize::MAX, usize::MAX)
        } else {
            let a = &courses[pool[rng.random_range(0..pool.len())]];
            let b = &courses[pool[rng.random_range(0..pool.len())]];
            (a.school, b.teachers[rng.random_range(0..b.teachers.len())])
        };
        let weights: Vec<f64> = pool
            .iter()
            .map(|&c| {
                let course = &courses[c];
                1.0 + if course.school == fav_school { FAVORITE_SCHOOL_BOOST } else { 0.0 }
                    + if course.teachers.contains(&fav_teacher) { FAVORITE_TEACHER_BOOST } else { 0.0 }
            })
            .collect();
        let picks = enrol(&mut rng, k, lam, config.n_courses, pool, &weights);
        students.push(Student {
            career,
            major,
            school,
            courses: picks,
        });
    }

    // Realised category top share, z-scored across students.
    let top_share: Vec<f64> = students
        .iter()
        .map(|s| {
            let mut counts = vec![0usize; config.n_categories];
            for &c in &s.courses {
                counts[courses[c].category] += 1;
            }
            *counts.iter().max().unwrap() as f64 / s.courses.len() as f64
        })
        .collect();
    let n = top_share.len() as f64;
    let mean = top_share.iter().sum::<f64>() / n;
    let sd = (top_share.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
    let z: Vec<f64> = top_share
        .iter()
        .map(|t| if sd > 1e-12 { (t - mean) / sd } else { 0.0 })
        .collect();

    let mut enrolled = vec![0u64; config.n_courses];
    for s in &students {
        for &c in &s.courses {
            enrolled[c] += 1;
        }
    }

    let mut g = HeteroGraph::new();
    let add = |g: &mut HeteroGraph, rec: NodeRecord| {
        g.add_node(rec).expect("generated ids are unique");
    };
    let named = |kind: NodeKind, i: usize, label: &str| {
        NodeRecord::new(format!("{}:{i}", kind.prefix()), NodeAttrs::named(kind, label).unwrap())
    };
    for i in 0..config.n_categories {
        add(&mut g, named(NodeKind::Category, i, &format!("Category {i}")));
    }
    for i in 0..config.n_schools {
        add(&mut g, named(NodeKind::School, i, &format!("School {i}")));
    }
    for i in 0..config.n_majors {
        add(&mut g, named(NodeKind::Major, i, &format!("Major {i}")));
    }
    for label in CAREERS {
        add(&mut g, NodeRecord::new(format!("career:{label}"), NodeAttrs::Career { name: label.into() }));
    }
    for t in 0..config.n_teachers {
        add(
            &mut g,
            NodeRecord::new(
                format!("teacher:{t}"),
                NodeAttrs::Teacher(TeacherAttrs {
                    name: format!("Teacher {t}"),
                    id: format!("T{t}"),
                    career: TEACHER_TITLES[teacher_title[t]].into(),
                }),
            ),
        );
    }
    for (c, n) in enrolled.iter().enumerate() {
        add(
            &mut g,
            NodeRecord::new(
                format!("course:{c}"),
                NodeAttrs::Course(CourseAttrs {
                    name: format!("Course {c}"),
                    id: format!("C{c}"),
                    url: format!("https://mooc.example.org/course/C{c}"),
                    num: *n,
                }),
            ),
        );
    }
    for (i, s) in students.iter().enumerate() {
        let coupling = config.coupling_for(s.career);
        let shift = coupling * z[i];
        let per_course = (HOURS_LOG_MEAN + HOURS_LOG_SD * (normal(&mut rng) + shift)).exp();
        let likes = (LIKES_LOG_MEAN + LIKES_LOG_SD * (normal(&mut rng) + shift)).exp();
        let response = (RESPONSE_LOG_MEAN + RESPONSE_LOG_SD * normal(&mut rng)).exp();
        let learning_time = (per_course * s.courses.len() as f64 * 100.0).round() / 100.0;
        add(
            &mut g,
            NodeRecord::new(
                format!("student:{i}"),
                NodeAttrs::Student(StudentAttrs {
                    name: format!("Student {i}"),
                    id: format!("U{i}"),
                    url: format!("https://mooc.example.org/u/U{i}"),
                    learning_time,
                    response: response.round() as u64,
                    likes: likes.round() as u64,
                }),
            ),
        );
    }

    let edge = |g: &mut HeteroGraph, kind: EdgeKind, h: String, t: String| {
        g.add_edge(kind, &h, &t).expect("generated edges are valid");
    };
    for (t, school) in teacher_school.iter().enumerate() {
        edge(&mut g, EdgeKind::TeachIn, format!("teacher:{t}"), format!("school:{school}"));
    }
    for (c, course) in courses.iter().enumerate() {
        edge(&mut g, EdgeKind::Belong, format!("course:{c}"), format!("category:{}", course.category));
        edge(&mut g, EdgeKind::BelongTo, format!("course:{c}"), format!("school:{}", course.school));
        for t in &course.teachers {
            edge(&mut g, EdgeKind::Teach, format!("teacher:{t}"), format!("course:{c}"));
        }
    }
    for (i, s) in students.iter().enumerate() {
        let id = format!("student:{i}");
        edge(&mut g, EdgeKind::WorkIn, id.clone(), format!("career:{}", CAREERS[s.career]));
        edge(&mut g, EdgeKind::LearnIn, id.clone(), format!("school:{}", s.school));
        edge(&mut g, EdgeKind::MajorIn, id.clone(), format!("major:{}", s.major));
        for c in &s.courses {
            edge(&mut g, EdgeKind::Learn, id.clone(), format!("course:{c}"));
        }
    }
    g.freeze();
    Ok(g)
}
