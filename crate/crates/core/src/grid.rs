//! Entity grid: sentences by discourse entities, cells hold syntactic roles.

use std::collections::{BTreeSet, HashMap};

use crate::document::{AnnotatedDocument, Role};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityGrid {
    pub doc_id: String,
    pub sentence_count: usize,
    /// Entity ids in order of first occurrence in the document.
    pub columns: Vec<String>,
    /// Per sentence, the occupied cells as `(column, role)` sorted by column.
    rows: Vec<Vec<(usize, Role)>>,
}

impl EntityGrid {
    pub fn row(&self, sentence: usize) -> &[(usize, Role)] {
        &self.rows[sentence]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, Role)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn column_index(&self, entity_id: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == entity_id)
    }

    pub fn cell(&self, sentence: usize, entity_id: &str) -> Option<Role> {
        let col = self.column_index(entity_id)?;
        self.rows
            .get(sentence)?
            .iter()
            .find(|(c, _)| *c == col)
            .map(|&(_, r)| r)
    }

    /// All occupied cells as `(sentence, entity_id, role)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, &str, Role)> {
        self.rows.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .map(move |&(c, r)| (i, self.columns[c].as_str(), r))
        })
    }

    pub fn cell_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Column indices present in each row, sorted.
    pub(crate) fn row_column_sets(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, _)| c).collect())
            .collect()
    }

    /// Number of distinct sentences each column occurs in.
    pub(crate) fn column_sentence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.columns.len()];
        for row in &self.rows {
            for &(c, _) in row {
                counts[c] += 1;
            }
        }
        counts
    }
}

/// Builds the grid. When an entity carries both roles in one sentence the
/// cell records `Subject`.
pub fn build_grid(doc: &AnnotatedDocument) -> EntityGrid {
    let mut columns: Vec<String> = Vec::new();
    let mut column_of: HashMap<&str, usize> = HashMap::new();
    let mut rows = Vec::with_capacity(doc.sentences.len());

    for sentence in &doc.sentences {
        let mut row: Vec<(usize, Role)> = Vec::new();
        for m in &sentence.mentions {
            let col = *column_of.entry(m.entity_id.as_str()).or_insert_with(|| {
                columns.push(m.entity_id.clone());
                columns.len() - 1
            });
            match row.iter_mut().find(|(c, _)| *c == col) {
                Some(cell) => cell.1 = cell.1.min(m.role),
                None => row.push((col, m.role)),
            }
        }
        row.sort_by_key(|&(c, _)| c);
        rows.push(row);
    }

    EntityGrid {
        doc_id: doc.doc_id.clone(),
        sentence_count: doc.sentences.len(),
        columns,
        rows,
    }
}

/// Reads the grid row by row, each row left to right across the columns.
pub fn entity_sequence(grid: &EntityGrid) -> Vec<&str> {
    grid.rows
        .iter()
        .flat_map(|row| row.iter().map(|&(c, _)| grid.columns[c].as_str()))
        .collect()
}

pub fn sentence_entity_sets(grid: &EntityGrid) -> Vec<BTreeSet<&str>> {
    grid.rows
        .iter()
        .map(|row| row.iter().map(|&(c, _)| grid.columns[c].as_str()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::{EntityMention, Sentence};
    use crate::fixtures::excerpt_document;

    #[test]
    fn excerpt_columns_and_cells() {
        let grid = build_grid(&excerpt_document());
        assert_eq!(
            grid.columns,
            [
                "man",
                "hope",
                "confidence",
                "boy",
                "you",
                "them",
                "i",
                "these"
            ]
        );
        for s in [0, 2, 4] {
            assert_eq!(grid.cell(s, "man"), Some(Role::Subject));
        }
        assert_eq!(grid.cell(1, "man"), None);
        assert_eq!(grid.cell(2, "you"), Some(Role::Subject));
        assert_eq!(grid.cell(4, "you"), Some(Role::Object));
        assert_eq!(grid.cell(3, "these"), Some(Role::Object));
    }

    #[test]
    fn empty_document_gives_empty_grid() {
        let grid = build_grid(&AnnotatedDocument::new("e", vec![]));
        assert_eq!(grid.sentence_count, 0);
        assert!(grid.columns.is_empty());
        assert!(entity_sequence(&grid).is_empty());
    }

    #[test]
    fn subject_dominates_object_in_one_sentence() {
        let s = Sentence::new(
            ["x", "saw", "x"],
            vec![
                EntityMention::new("x", Role::Object, 0),
                EntityMention::new("x", Role::Subject, 2),
            ],
        );
        let grid = build_grid(&AnnotatedDocument::new("d", vec![s]));
        assert_eq!(grid.cell_count(), 1);
        assert_eq!(grid.cell(0, "x"), Some(Role::Subject));
    }

    #[test]
    fn excerpt_sequence() {
        let grid = build_grid(&excerpt_document());
        assert_eq!(
            entity_sequence(&grid),
            [
                "man",
                "hope",
                "confidence",
                "boy",
                "man",
                "you",
                "them",
                "boy",
                "i",
                "these",
                "man",
                "you"
            ]
        );
    }

    #[test]
    fn single_entity_sequence() {
        let s = Sentence::new(["a"], vec![EntityMention::new("a", Role::Subject, 0)]);
        let grid = build_grid(&AnnotatedDocument::new("d", vec![s]));
        assert_eq!(entity_sequence(&grid), ["a"]);
    }

    #[test]
    fn excerpt_sets() {
        let grid = build_grid(&excerpt_document());
        let sets = sentence_entity_sets(&grid);
        let expect: Vec<BTreeSet<&str>> = vec![
            ["man", "hope", "confidence"].into(),
            ["boy"].into(),
            ["man", "you", "them"].into(),
            ["boy", "i", "these"].into(),
            ["man", "you"].into(),
        ];
        assert_eq!(sets, expect);
    }

    #[test]
    fn empty_row_gives_empty_set() {
        let doc = AnnotatedDocument::new(
            "d",
            vec![
                Sentence::new(["a"], vec![EntityMention::new("a", Role::Subject, 0)]),
                Sentence::new(["nothing"], vec![]),
            ],
        );
        let grid = build_grid(&doc);
        assert!(sentence_entity_sets(&grid)[1].is_empty());
    }
}
