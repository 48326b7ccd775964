use super::FeatureDataset;
use crate::{Error, Result};

/// Ordered partition of `[0, C)` into non-empty tasks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSpec {
    tasks: Vec<Vec<usize>>,
    num_classes: usize,
    owner: Vec<usize>,
}

/// Samples and classes of one task. `task_index` is 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskView {
    pub task_index: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub classes: Vec<usize>,
}

impl TaskSpec {
    pub fn new(tasks: Vec<Vec<usize>>, num_classes: usize) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::invalid("no tasks"));
        }
        const UNASSIGNED: usize = usize::MAX;
        let mut owner = vec![UNASSIGNED; num_classes];
        for (t, classes) in tasks.iter().enumerate() {
            if classes.is_empty() {
                return Err(Error::invalid(format!("task {} has no classes", t + 1)));
            }
            for &c in classes {
                if c >= num_classes {
                    return Err(Error::Label {
                        label: c,
                        num_classes,
                    });
                }
                if owner[c] != UNASSIGNED {
                    return Err(Error::invalid(format!(
                        "class {c} appears in task {} and task {}",
                        owner[c],
                        t + 1
                    )));
                }
                owner[c] = t + 1;
            }
        }
        if let Some(c) = owner.iter().position(|&o| o == UNASSIGNED) {
            return Err(Error::invalid(format!("class {c} belongs to no task")));
        }
        Ok(TaskSpec {
            tasks,
            num_classes,
            owner,
        })
    }

    /// Ascending contiguous blocks; the first `C mod T` tasks get one extra class.
    pub fn contiguous(num_classes: usize, num_tasks: usize) -> Result<Self> {
        if num_tasks == 0 || num_tasks > num_classes {
            return Err(Error::invalid(format!(
                "cannot split {num_classes} classes into {num_tasks} tasks"
            )));
        }
        let (base, extra) = (num_classes / num_tasks, num_classes % num_tasks);
        let mut next = 0;
        let tasks = (0..num_tasks)
            .map(|t| {
                let size = base + usize::from(t < extra);
                let block = (next..next + size).collect();
                next += size;
                block
            })
            .collect();
        TaskSpec::new(tasks, num_classes)
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn tasks(&self) -> &[Vec<usize>] {
        &self.tasks
    }

    /// Classes of task `t` (1-based).
    pub fn classes_of(&self, t: usize) -> &[usize] {
        &self.tasks[t - 1]
    }

    /// 1-based index of the task that introduces `class`.
    pub fn owner_of(&self, class: usize) -> usize {
        self.owner[class]
    }

    pub fn views(&self, ds: &FeatureDataset) -> Result<Vec<TaskView>> {
        if ds.num_classes() != self.num_classes {
            return Err(Error::invalid(format!(
                "task spec covers {} classes, dataset has {}",
                self.num_classes,
                ds.num_classes()
            )));
        }
        let collect = |labels: &[usize], t: usize| -> Vec<usize> {
            labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| self.owner[l] == t)
                .map(|(i, _)| i)
                .collect()
        };
        Ok((1..=self.num_tasks())
            .map(|t| TaskView {
                task_index: t,
                train_indices: collect(ds.labels_train(), t),
                test_indices: collect(ds.labels_test(), t),
                classes: self.tasks[t - 1].clone(),
            })
            .collect())
    }
}

pub fn split_tasks(ds: &FeatureDataset, num_tasks: usize) -> Result<(TaskSpec, Vec<TaskView>)> {
    let spec = TaskSpec::contiguous(ds.num_classes(), num_tasks)?;
    let views = spec.views(ds)?;
    Ok((spec, views))
}

/// Classes of tasks `1..=t` versus the rest, both ascending.
pub fn seen_unseen_partition(spec: &TaskSpec, t: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if t > spec.num_tasks() {
        return Err(Error::invalid(format!(
            "task {t} is past the last task {}",
            spec.num_tasks()
        )));
    }
    Ok((0..spec.num_classes).partition(|&c| spec.owner[c] <= t))
}
