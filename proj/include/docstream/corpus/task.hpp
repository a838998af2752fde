/* Copyright 2026 The docstream Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace docstream {

enum class TaskId { fact_checking, entity_linking, slot_filling, open_qa, dialogue };

inline constexpr std::array<TaskId, 5> kAllTasks = {
    TaskId::fact_checking, TaskId::entity_linking, TaskId::slot_filling,
    TaskId::open_qa, TaskId::dialogue};

std::string_view task_name(TaskId task);
std::optional<TaskId> parse_task(std::string_view name);
// Throws ValidationError listing the valid names.
TaskId require_task(std::string_view name);

struct DatasetInfo {
  std::string_view name;
  TaskId task;
  bool has_train_split;
};

// The eleven KILT datasets and the task each belongs to. WnWi, WnCw and
// ELI5 ship no training split.
inline constexpr std::array<DatasetInfo, 11> kDatasets = {{
    {"FEV", TaskId::fact_checking, true},
    {"AY2", TaskId::entity_linking, true},
    {"WnWi", TaskId::entity_linking, false},
    {"WnCw", TaskId::entity_linking, false},
    {"T-REx", TaskId::slot_filling, true},
    {"zsRE", TaskId::slot_filling, true},
    {"NQ", TaskId::open_qa, true},
    {"HoPo", TaskId::open_qa, true},
    {"TQA", TaskId::open_qa, true},
    {"ELI5", TaskId::open_qa, false},
    {"WoW", TaskId::dialogue, true},
}};

const DatasetInfo* find_dataset(std::string_view name);
// Throws ValidationError for unknown datasets.
TaskId task_of_dataset(std::string_view name);

}  // namespace docstream
