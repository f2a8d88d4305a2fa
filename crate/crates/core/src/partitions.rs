//! Set partitions enumerated as restricted-growth strings.

/// Iterator over all set partitions of `0..n` in lexicographic
/// restricted-growth-string order. Each item assigns a block label to every
/// element; labels appear in first-occurrence order.
#[derive(Debug, Clone)]
pub struct RestrictedGrowth {
    labels: Vec<usize>,
    maxima: Vec<usize>,
    done: bool,
}

impl RestrictedGrowth {
    pub fn new(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            maxima: vec![0; n],
            done: false,
        }
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.labels.clone();
        let n = self.labels.len();
        // maxima[i] = max(labels[0..i]).
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.labels[i] <= self.maxima[i] {
                self.labels[i] += 1;
                for k in i + 1..n {
                    self.labels[k] = 0;
                    self.maxima[k] = self.maxima[k - 1].max(self.labels[k - 1]);
                }
                break;
            }
        }
        Some(out)
    }
}

/// Groups element indices by label; blocks ordered by smallest element.
pub fn blocks(labels: &[usize]) -> Vec<Vec<usize>> {
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); count];
    for (element, &label) in labels.iter().enumerate() {
        out[label].push(element);
    }
    out
}

/// Bell number `B_n`, by the Bell triangle.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("row is nonempty"));
        for &x in &row {
            let prev = *next.last().expect("next is nonempty");
            next.push(prev + x);
        }
        row = next;
    }
    row[0]
}
