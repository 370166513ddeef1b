//! Class hierarchies: loading, validation, rollup and reference collections.
//!
//! A hierarchy is a forest of classes over a shared publication universe.
//! Each class carries gold labels (used by evaluation) and a member set.
//! With rollup enabled (the default) every class's members include all of
//! its descendants' members, so child ⊆ parent holds throughout and every
//! term is at least as frequent in the parent as in the child.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::RowIssue;
use crate::error::{Error, Result};
use crate::extraction::{Pipeline, Term};
use crate::DEFAULT_MIN_CLASS_SIZE;

/// Reserved class id for the implicit parent of root classes.
pub const VIRTUAL_ROOT_ID: &str = "";

/// Compact publication handle; ids are interned once per hierarchy.
pub type PubId = u32;

#[derive(Debug, Clone)]
pub struct HierarchyOptions {
    /// Classes with fewer members are kept for rollup but are not
    /// labeling/evaluation targets.
    pub min_class_size: u64,
    /// Union each class's members with all of its descendants' members.
    pub rollup: bool,
    /// Fail the build when two classes on the same level share a publication.
    pub require_disjoint_levels: bool,
    /// Give root classes the union of all publications as their parent.
    pub virtual_root: bool,
    /// Split raw labels at '&' into separate labels before normalization.
    pub split_amp: bool,
    /// Drop gold labels that do not read as a single noun phrase; classes
    /// losing every label are flagged and skipped by evaluation.
    pub single_phrase_labels: bool,
}

impl Default for HierarchyOptions {
    fn default() -> HierarchyOptions {
        HierarchyOptions {
            min_class_size: DEFAULT_MIN_CLASS_SIZE,
            rollup: true,
            require_disjoint_levels: false,
            virtual_root: true,
            split_amp: false,
            single_phrase_labels: false,
        }
    }
}

/// One row of the class file, before validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassDecl {
    pub class_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ClassNode {
    pub class_id: String,
    pub parent_id: Option<String>,
    /// Root classes sit at level 1.
    pub level: u32,
    /// Normalized gold labels; empty only when the single-phrase filter
    /// removed every label (see [`ClassNode::label_filtered`]).
    pub labels: Vec<Term>,
    /// Sorted, deduplicated member handles (rolled up when enabled).
    pub members: Vec<PubId>,
    /// True when single_phrase_labels discarded all of this class's labels.
    pub label_filtered: bool,
}

impl ClassNode {
    pub fn size(&self) -> u64 {
        self.members.len() as u64
    }
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    nodes: BTreeMap<String, ClassNode>,
    roots: Vec<String>,
    pub_ids: Vec<String>,
    /// Union of every class's members; the virtual root's member set.
    all_members: Vec<PubId>,
    min_class_size: u64,
    rollup: bool,
    virtual_root: bool,
}

impl Hierarchy {
    pub fn node(&self, class_id: &str) -> Result<&ClassNode> {
        self.nodes
            .get(class_id)
            .ok_or_else(|| Error::UnknownClass(class_id.to_string()))
    }

    /// All classes in deterministic (lexicographic id) order.
    pub fn nodes(&self) -> impl Iterator<Item = &ClassNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> &[String] {
        &self.roots
    }

    pub fn rollup(&self) -> bool {
        self.rollup
    }

    pub fn min_class_size(&self) -> u64 {
        self.min_class_size
    }

    pub fn has_virtual_root(&self) -> bool {
        self.virtual_root
    }

    /// Interned publication ids, position = handle value.
    pub fn pub_ids(&self) -> &[String] {
        &self.pub_ids
    }

    pub fn pub_id(&self, handle: PubId) -> &str {
        &self.pub_ids[handle as usize]
    }

    pub fn all_members(&self) -> &[PubId] {
        &self.all_members
    }

    /// Classes large enough to label and evaluate.
    pub fn target_classes(&self) -> impl Iterator<Item = &ClassNode> {
        self.nodes()
            .filter(move |n| n.size() >= self.min_class_size)
    }

    pub fn is_target(&self, node: &ClassNode) -> bool {
        node.size() >= self.min_class_size
    }

    /// The parent's member set; the union of all publications for a root
    /// class under the virtual-root convention, `None` for a root when the
    /// virtual root is disabled (such classes cannot be scored).
    pub fn parent_members(&self, node: &ClassNode) -> Option<&[PubId]> {
        match &node.parent_id {
            Some(pid) => Some(&self.nodes[pid].members),
            None if self.virtual_root => Some(&self.all_members),
            None => None,
        }
    }

    /// The id scoring reads the parent statistics from: the actual parent,
    /// or the reserved virtual-root id for roots.
    pub fn parent_id_of<'a>(&self, node: &'a ClassNode) -> Option<&'a str> {
        match &node.parent_id {
            Some(pid) => Some(pid.as_str()),
            None if self.virtual_root => Some(VIRTUAL_ROOT_ID),
            None => None,
        }
    }

    /// Reference collection: publications of the parent outside the class.
    pub fn reference_members(&self, node: &ClassNode) -> Option<Vec<PubId>> {
        let parent = self.parent_members(node)?;
        Some(difference(parent, &node.members))
    }
}

fn union(a: &[PubId], b: &[PubId]) -> Vec<PubId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn difference(a: &[PubId], b: &[PubId]) -> Vec<PubId> {
    let mut out = Vec::new();
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j < b.len() && b[j] == x {
            continue;
        }
        out.push(x);
    }
    out
}

/// Builds a validated hierarchy from parsed declarations and direct
/// publication assignments. Assignments must reference declared classes
/// (file loaders screen unknown references into row issues first).
pub fn build_hierarchy(
    classes: &[ClassDecl],
    assignments: &[(String, String)],
    options: &HierarchyOptions,
    pipeline: &Pipeline,
) -> Result<Hierarchy> {
    let mut order: Vec<&str> = Vec::with_capacity(classes.len());
    let mut decls: HashMap<&str, &ClassDecl> = HashMap::with_capacity(classes.len());
    for decl in classes {
        if decl.class_id.is_empty() {
            return Err(Error::InvalidParameter("class id must be non-empty".into()));
        }
        if decls.insert(&decl.class_id, decl).is_some() {
            return Err(Error::DuplicateClass(decl.class_id.clone()));
        }
        order.push(&decl.class_id);
    }
    for decl in classes {
        if let Some(parent) = &decl.parent_id {
            if !decls.contains_key(parent.as_str()) {
                return Err(Error::UnknownParent {
                    class: decl.class_id.clone(),
                    parent: parent.clone(),
                });
            }
        }
    }

    // Levels by breadth-first descent from the roots; anything left without
    // a level sits on a parent cycle.
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut queue: Vec<&str> = Vec::new();
    for decl in classes {
        match &decl.parent_id {
            Some(parent) => children
                .entry(parent.as_str())
                .or_default()
                .push(&decl.class_id),
            None => queue.push(&decl.class_id),
        }
    }
    let mut levels: HashMap<&str, u32> = HashMap::new();
    for &root in &queue {
        levels.insert(root, 1);
    }
    let mut head = 0;
    while head < queue.len() {
        let current = queue[head];
        head += 1;
        let level = levels[current];
        if let Some(kids) = children.get(current) {
            for &kid in kids {
                levels.insert(kid, level + 1);
                queue.push(kid);
            }
        }
    }
    if levels.len() < classes.len() {
        let stuck = order
            .iter()
            .find(|id| !levels.contains_key(*id))
            .expect("some class has no level");
        return Err(Error::HierarchyCycle(stuck.to_string()));
    }

    // Intern publication ids in first-seen order and collect direct members.
    let mut pub_ids: Vec<String> = Vec::new();
    let mut pub_index: HashMap<String, PubId> = HashMap::new();
    let mut direct: HashMap<&str, Vec<PubId>> = HashMap::new();
    for (pub_id, class_id) in assignments {
        let class_key = decls
            .get_key_value(class_id.as_str())
            .ok_or_else(|| Error::UnknownClass(class_id.clone()))?
            .0;
        let handle = match pub_index.get(pub_id.as_str()) {
            Some(&h) => h,
            None => {
                let h = pub_ids.len() as PubId;
                pub_ids.push(pub_id.clone());
                pub_index.insert(pub_id.clone(), h);
                h
            }
        };
        direct.entry(class_key).or_default().push(handle);
    }

    let mut members: HashMap<&str, Vec<PubId>> = HashMap::with_capacity(classes.len());
    for &id in &order {
        let mut m = direct.remove(id).unwrap_or_default();
        m.sort_unstable();
        m.dedup();
        members.insert(id, m);
    }

    if options.rollup {
        // Children carry deeper levels, so one deepest-first pass over the
        // forest folds every subtree into its ancestors.
        let mut by_depth: Vec<&str> = order.clone();
        by_depth.sort_by_key(|id| std::cmp::Reverse(levels[id]));
        for id in by_depth {
            if let Some(parent) = decls[id].parent_id.as_deref() {
                let child_members = members[id].clone();
                let parent_members = members.get_mut(parent).expect("parent exists");
                *parent_members = union(parent_members, &child_members);
            }
        }
    }

    if options.require_disjoint_levels {
        let mut seen: HashMap<(u32, PubId), &str> = HashMap::new();
        for &id in &order {
            let level = levels[id];
            for &p in &members[id] {
                if let Some(&other) = seen.get(&(level, p)) {
                    let (a, b) = if other < id { (other, id) } else { (id, other) };
                    return Err(Error::DisjointnessViolation {
                        a: a.to_string(),
                        b: b.to_string(),
                        level,
                        publication: pub_ids[p as usize].clone(),
                    });
                }
                seen.insert((level, p), id);
            }
        }
    }

    let mut all_members: Vec<PubId> = Vec::new();
    let mut nodes = BTreeMap::new();
    let mut roots = Vec::new();
    for &id in &order {
        let decl = decls[id];
        let mut labels: Vec<&str> = Vec::new();
        for raw in &decl.labels {
            if options.split_amp {
                labels.extend(raw.split('&').map(str::trim).filter(|s| !s.is_empty()));
            } else {
                labels.push(raw.as_str());
            }
        }
        if labels.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "class {id} declares no labels"
            )));
        }
        if options.single_phrase_labels {
            labels.retain(|raw| pipeline.is_single_noun_phrase(raw));
        }
        let mut normalized: Vec<Term> = labels
            .iter()
            .filter_map(|raw| pipeline.term_from_raw(raw))
            .collect();
        normalized.sort_unstable();
        normalized.dedup();
        // Set whether the phrase filter or normalization emptied the label
        // set; either way the class has no usable gold labels.
        let label_filtered = normalized.is_empty();
        let member_set = members.remove(id).expect("members collected");
        all_members = union(&all_members, &member_set);
        if decl.parent_id.is_none() {
            roots.push(id.to_string());
        }
        nodes.insert(
            id.to_string(),
            ClassNode {
                class_id: id.to_string(),
                parent_id: decl.parent_id.clone(),
                level: levels[id],
                labels: normalized,
                members: member_set,
                label_filtered,
            },
        );
    }
    roots.sort_unstable();

    Ok(Hierarchy {
        nodes,
        roots,
        pub_ids,
        all_members,
        min_class_size: options.min_class_size,
        rollup: options.rollup,
        virtual_root: options.virtual_root,
    })
}

/// Loads the JSONL class file: one `{"class_id", "parent_id"?, "labels"}`
/// object per line.
pub fn load_class_file(path: impl AsRef<Path>) -> Result<Vec<ClassDecl>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut decls = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let decl: ClassDecl = serde_json::from_str(line).map_err(|e| Error::Row {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        decls.push(decl);
    }
    Ok(decls)
}

/// Accepted `(publication_id, class_id)` rows plus the screened-out issues.
pub type AssignmentIngest = (Vec<(String, String)>, Vec<RowIssue>);

/// Loads the assignment CSV (`publication_id,class_id`, with header).
/// Rows naming undeclared classes are screened out as row issues.
pub fn load_assignment_file(
    path: impl AsRef<Path>,
    classes: &[ClassDecl],
) -> Result<AssignmentIngest> {
    let path = path.as_ref();
    let known: std::collections::HashSet<&str> =
        classes.iter().map(|c| c.class_id.as_str()).collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => Error::Row {
                path: path.to_path_buf(),
                line: 1,
                message: format!("{other:?}"),
            },
        })?;
    let mut assignments = Vec::new();
    let mut issues = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 2;
        match row {
            Ok(record) => {
                let (Some(pub_id), Some(class_id)) = (record.get(0), record.get(1)) else {
                    issues.push(RowIssue {
                        line,
                        message: "expected publication_id,class_id".to_string(),
                    });
                    continue;
                };
                if pub_id.is_empty() || class_id.is_empty() {
                    issues.push(RowIssue {
                        line,
                        message: "empty publication or class id".to_string(),
                    });
                    continue;
                }
                if !known.contains(class_id) {
                    issues.push(RowIssue {
                        line,
                        message: format!("assignment to unknown class {class_id}"),
                    });
                    continue;
                }
                assignments.push((pub_id.to_string(), class_id.to_string()));
            }
            Err(e) => issues.push(RowIssue {
                line,
                message: e.to_string(),
            }),
        }
    }
    Ok((assignments, issues))
}

/// Convenience composition of the two loaders and the builder.
pub fn load_hierarchy(
    class_path: impl AsRef<Path>,
    assignment_path: impl AsRef<Path>,
    options: &HierarchyOptions,
    pipeline: &Pipeline,
) -> Result<(Hierarchy, Vec<RowIssue>)> {
    let classes = load_class_file(class_path)?;
    let (assignments, issues) = load_assignment_file(assignment_path, &classes)?;
    let hierarchy = build_hierarchy(&classes, &assignments, options, pipeline)?;
    Ok((hierarchy, issues))
}
