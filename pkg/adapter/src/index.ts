export {
  Activation,
  LayerNotFound,
  ModelFormatError,
  StubLayer,
  StubModel,
  extractFeatures,
  forward,
  inputDim,
  layerOutputs,
  loadStubModel,
  predict,
  resolveLayer,
  validateModel,
} from './stub-model.js';
export {
  FORMAT_VERSION,
  ManifestEntry,
  ProbeColumn,
  flagAccuracy,
  writeFeatures,
  writeManifest,
  writeOutcomes,
} from './formats.js';
export {
  Dataset,
  DatasetFormatError,
  ExportJob,
  ExportResult,
  Sample,
  loadDataset,
  runExportJob,
  validateDataset,
} from './export-job.js';
